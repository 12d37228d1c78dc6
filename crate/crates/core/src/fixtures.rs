//! Programmatic benchmark maps.
//!
//! Every fixture is a world occupancy grid at 0.05 m built from axis-aligned
//! rectangles, plus a start and a goal pose. All maps are bordered by walls.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Pose2, WorldPoint};
use crate::gridmap::{GridGeometry, Occupancy, OccupancyGrid};

pub const WORLD_RESOLUTION: f64 = 0.05;
const WALL: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub world: OccupancyGrid,
    pub start: Pose2,
    pub goal: Pose2,
}

pub const FIXTURE_NAMES: [&str; 5] = ["corridor", "u_turn", "maze", "door_boxes", "clutter_42"];

/// Looks up a fixture by name; `clutter_<seed>` accepts any seed.
pub fn fixture(name: &str) -> Option<Fixture> {
    match name {
        "corridor" => Some(corridor()),
        "u_turn" => Some(u_turn()),
        "maze" => Some(maze()),
        "door_boxes" => Some(door_with_boxes()),
        _ => name
            .strip_prefix("clutter_")
            .and_then(|s| s.parse().ok())
            .map(clutter),
    }
}

pub fn all_fixtures() -> Vec<Fixture> {
    FIXTURE_NAMES.iter().map(|n| fixture(n).unwrap()).collect()
}

fn blank(width_m: f64, height_m: f64) -> OccupancyGrid {
    let geom = GridGeometry::new(
        (width_m / WORLD_RESOLUTION).round() as usize,
        (height_m / WORLD_RESOLUTION).round() as usize,
        WORLD_RESOLUTION,
        WorldPoint::default(),
    )
    .expect("fixture geometry");
    let mut g = OccupancyGrid::new(geom, Occupancy::Free);
    let p = WorldPoint::new;
    g.fill_rect(p(0.0, 0.0), p(width_m, WALL), Occupancy::Occupied);
    g.fill_rect(p(0.0, height_m - WALL), p(width_m, height_m), Occupancy::Occupied);
    g.fill_rect(p(0.0, 0.0), p(WALL, height_m), Occupancy::Occupied);
    g.fill_rect(p(width_m - WALL, 0.0), p(width_m, height_m), Occupancy::Occupied);
    g
}

fn block(g: &mut OccupancyGrid, x0: f64, y0: f64, x1: f64, y1: f64) {
    g.fill_rect(WorldPoint::new(x0, y0), WorldPoint::new(x1, y1), Occupancy::Occupied);
}

/// L-shaped corridor, 1.4 m to 1.6 m wide, with a right-angle bend.
pub fn corridor() -> Fixture {
    let mut g = blank(15.0, 15.0);
    block(&mut g, 0.0, 1.6, 13.2, 15.0);
    Fixture {
        name: "corridor".into(),
        world: g,
        start: Pose2::new(1.0, 0.9, 0.0),
        goal: Pose2::new(14.0, 12.0, FRAC_PI_2),
    }
}

/// Two parallel lanes joined by a sharp U-turn at the far end.
pub fn u_turn() -> Fixture {
    let mut g = blank(15.0, 6.0);
    block(&mut g, 0.0, 2.6, 12.9, 3.0);
    Fixture {
        name: "u_turn".into(),
        world: g,
        start: Pose2::new(1.2, 1.4, 0.0),
        goal: Pose2::new(1.2, 4.3, PI),
    }
}

/// Serpentine of four walls with alternating gaps.
pub fn maze() -> Fixture {
    let mut g = blank(15.0, 15.0);
    for (k, x) in [3.0, 6.0, 9.0, 12.0].into_iter().enumerate() {
        if k % 2 == 0 {
            block(&mut g, x, 0.0, x + WALL, 13.4);
        } else {
            block(&mut g, x, 1.6, x + WALL, 15.0);
        }
    }
    block(&mut g, 4.4, 4.0, 5.0, 4.6);
    block(&mut g, 7.2, 9.0, 7.8, 9.6);
    block(&mut g, 10.0, 6.0, 11.2, 6.6);
    Fixture {
        name: "maze".into(),
        world: g,
        start: Pose2::new(1.5, 1.5, FRAC_PI_2),
        goal: Pose2::new(13.6, 13.5, FRAC_PI_2),
    }
}

/// Two rooms joined by a 1 m door, boxes scattered on both sides.
pub fn door_with_boxes() -> Fixture {
    let mut g = blank(15.0, 15.0);
    block(&mut g, 7.4, 0.0, 7.6, 7.0);
    block(&mut g, 7.4, 8.0, 7.6, 15.0);
    for (x, y) in [
        (2.5, 5.0),
        (4.0, 9.5),
        (5.5, 3.0),
        (3.0, 12.0),
        (5.8, 7.0),
        (9.5, 6.5),
        (10.5, 10.0),
        (12.0, 4.0),
        (11.5, 12.5),
        (9.0, 2.0),
    ] {
        block(&mut g, x, y, x + 0.6, y + 0.6);
    }
    Fixture {
        name: "door_boxes".into(),
        world: g,
        start: Pose2::new(1.5, 1.5, 0.0),
        goal: Pose2::new(13.5, 13.0, 0.0),
    }
}

/// Random boxes from a fixed seed, kept clear of the start and goal.
pub fn clutter(seed: u64) -> Fixture {
    let mut g = blank(15.0, 15.0);
    let start = Pose2::new(1.2, 1.2, FRAC_PI_2 / 2.0);
    let goal = Pose2::new(13.8, 13.8, FRAC_PI_2 / 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut placed = 0;
    while placed < 30 {
        let (w, h) = (rng.gen_range(0.3..1.0), rng.gen_range(0.3..1.0));
        let (x, y) = (rng.gen_range(0.5..14.5 - w), rng.gen_range(0.5..14.5 - h));
        let center = WorldPoint::new(x + w / 2.0, y + h / 2.0);
        if center.distance(start.position()) < 1.8 || center.distance(goal.position()) < 1.8 {
            continue;
        }
        block(&mut g, x, y, x + w, y + h);
        placed += 1;
    }
    Fixture {
        name: format!("clutter_{seed}"),
        world: g,
        start,
        goal,
    }
}
