//! Environment-constrained 2-D heuristic.
//!
//! A backward Dijkstra search from the goal cell over an 8- or 16-connected grid gives
//! every cell its shortest cost-to-goal (seconds) and the direction `alpha` from the
//! cell toward its predecessor on that shortest path. Cells closer to an obstacle than
//! the inscribed radius are impassable and keep an infinite cost.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridmap::{DistanceGrid, GridGeometry};
use crate::primitives::LatticeState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeuristicError {
    #[error("goal cell ({ix}, {iy}) is outside the grid or inside the inflated obstacle region")]
    InvalidGoal { ix: i64, iy: i64 },
    #[error("cell traversal cost must be positive, got {0}")]
    InvalidCost(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Eight,
    Sixteen,
}

impl Connectivity {
    pub fn moves(self) -> &'static [(i32, i32)] {
        const SIXTEEN: [(i32, i32); 16] = [
            (1, 0),
            (0, 1),
            (-1, 0),
            (0, -1),
            (1, 1),
            (-1, 1),
            (-1, -1),
            (1, -1),
            (2, 1),
            (1, 2),
            (-1, 2),
            (-2, 1),
            (-2, -1),
            (-1, -2),
            (1, -2),
            (2, -1),
        ];
        match self {
            Connectivity::Eight => &SIXTEEN[..8],
            Connectivity::Sixteen => &SIXTEEN,
        }
    }
}

const NO_PRED: u32 = u32::MAX;

/// Cost-to-goal and predecessor direction per cell.
#[derive(Debug, Clone)]
pub struct HeuristicField {
    geometry: GridGeometry,
    goal: (usize, usize),
    connectivity: Connectivity,
    cost: Vec<f64>,
    pred: Vec<u32>,
}

#[derive(PartialEq)]
struct Entry {
    cost: f64,
    idx: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on cost, then on index for a reproducible pop order.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Backward Dijkstra from `goal`. Edge costs are metric move length times
/// `cell_traversal_cost` (seconds per meter). Equal-cost predecessors keep the first
/// one popped.
pub fn build_heuristic(
    dg: &DistanceGrid,
    goal: (usize, usize),
    connectivity: Connectivity,
    inscribed_r: f64,
    cell_traversal_cost: f64,
) -> Result<HeuristicField, HeuristicError> {
    if !(cell_traversal_cost > 0.0 && cell_traversal_cost.is_finite()) {
        return Err(HeuristicError::InvalidCost(cell_traversal_cost));
    }
    let g = *dg.geometry();
    let (w, h) = (g.width(), g.height());
    let blocked = |ix: usize, iy: usize| dg.get(ix, iy) < inscribed_r;
    if goal.0 >= w || goal.1 >= h || blocked(goal.0, goal.1) {
        return Err(HeuristicError::InvalidGoal {
            ix: goal.0 as i64,
            iy: goal.1 as i64,
        });
    }
    let n = g.cell_count();
    let mut cost = vec![f64::INFINITY; n];
    let mut pred = vec![NO_PRED; n];
    let mut closed = vec![false; n];
    let moves: Vec<(i32, i32, f64)> = connectivity
        .moves()
        .iter()
        .map(|&(dx, dy)| {
            (
                dx,
                dy,
                f64::from(dx).hypot(f64::from(dy)) * g.resolution() * cell_traversal_cost,
            )
        })
        .collect();

    let start = g.index(goal.0, goal.1);
    cost[start] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Entry {
        cost: 0.0,
        idx: start as u32,
    });
    while let Some(Entry { cost: c, idx }) = heap.pop() {
        let idx = idx as usize;
        if closed[idx] || c > cost[idx] {
            continue;
        }
        closed[idx] = true;
        let (cx, cy) = ((idx % w) as i32, (idx / w) as i32);
        for &(dx, dy, step) in &moves {
            let (nx, ny) = (cx + dx, cy + dy);
            if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            if blocked(nx, ny) {
                continue;
            }
            let ni = ny * w + nx;
            if closed[ni] {
                continue;
            }
            let nc = c + step;
            if nc < cost[ni] {
                cost[ni] = nc;
                pred[ni] = idx as u32;
                heap.push(Entry {
                    cost: nc,
                    idx: ni as u32,
                });
            }
        }
    }
    Ok(HeuristicField {
        geometry: g,
        goal,
        connectivity,
        cost,
        pred,
    })
}

impl HeuristicField {
    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn goal(&self) -> (usize, usize) {
        self.goal
    }

    pub fn connectivity(&self) -> Connectivity {
        self.connectivity
    }

    pub fn costs(&self) -> &[f64] {
        &self.cost
    }

    pub fn cost_at(&self, ix: usize, iy: usize) -> f64 {
        self.cost[self.geometry.index(ix, iy)]
    }

    /// Predecessor cell on the shortest path to the goal.
    pub fn predecessor(&self, ix: usize, iy: usize) -> Option<(usize, usize)> {
        let p = self.pred[self.geometry.index(ix, iy)];
        (p != NO_PRED).then(|| {
            let w = self.geometry.width();
            (p as usize % w, p as usize / w)
        })
    }

    /// Angle from the cell center toward its predecessor's center, in `(-pi, pi]`.
    /// Undefined at the goal and at unreachable cells.
    pub fn alpha(&self, ix: i32, iy: i32) -> Option<f64> {
        if !self.geometry.contains(i64::from(ix), i64::from(iy)) {
            return None;
        }
        let (px, py) = self.predecessor(ix as usize, iy as usize)?;
        Some((py as f64 - f64::from(iy)).atan2(px as f64 - f64::from(ix)))
    }

    /// Cost-to-goal for a lattice state; infinite outside the grid.
    pub fn h(&self, s: LatticeState) -> f64 {
        if !self.geometry.contains(i64::from(s.ix), i64::from(s.iy)) {
            return f64::INFINITY;
        }
        self.cost_at(s.ix as usize, s.iy as usize)
    }

    /// Alpha values with undefined cells as NaN, row-major.
    pub fn alpha_grid(&self) -> Vec<f64> {
        let w = self.geometry.width();
        (0..self.cost.len())
            .map(|i| {
                self.alpha((i % w) as i32, (i / w) as i32)
                    .unwrap_or(f64::NAN)
            })
            .collect()
    }

    /// Dumps cost and alpha as grayscale PFM images (`<stem>_cost.pfm`,
    /// `<stem>_alpha.pfm`), bottom row first like the grid itself.
    pub fn write_debug_pfm(&self, dir: &Path, stem: &str) -> std::io::Result<()> {
        write_pfm(&dir.join(format!("{stem}_cost.pfm")), &self.geometry, &self.cost)?;
        write_pfm(
            &dir.join(format!("{stem}_alpha.pfm")),
            &self.geometry,
            &self.alpha_grid(),
        )
    }
}

/// Portable float map, little-endian, one channel.
pub fn write_pfm(path: &Path, geometry: &GridGeometry, values: &[f64]) -> std::io::Result<()> {
    let mut out = Vec::with_capacity(32 + values.len() * 4);
    write!(out, "Pf\n{} {}\n-1.0\n", geometry.width(), geometry.height())?;
    for v in values {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    std::fs::write(path, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::WorldPoint;
    use crate::gridmap::{distance_transform, Occupancy, OccupancyGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn geom(w: usize, h: usize) -> GridGeometry {
        GridGeometry::new(w, h, 0.1, WorldPoint::default()).unwrap()
    }

    /// Bellman-Ford style relaxation sweeps to a fixed point.
    fn oracle(dg: &DistanceGrid, goal: (usize, usize), conn: Connectivity, r: f64, c: f64) -> Vec<f64> {
        let g = dg.geometry();
        let (w, h) = (g.width() as i32, g.height() as i32);
        let mut cost = vec![f64::INFINITY; g.cell_count()];
        cost[goal.1 * g.width() + goal.0] = 0.0;
        loop {
            let mut changed = false;
            for y in 0..h {
                for x in 0..w {
                    if dg.get(x as usize, y as usize) < r {
                        continue;
                    }
                    let i = (y * w + x) as usize;
                    for &(dx, dy) in conn.moves() {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx < 0 || ny < 0 || nx >= w || ny >= h {
                            continue;
                        }
                        let j = (ny * w + nx) as usize;
                        let cand = cost[j] + (f64::from(dx * dx + dy * dy)).sqrt() * 0.1 * c;
                        if cand < cost[i] - 1e-12 {
                            cost[i] = cand;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return cost;
            }
        }
    }

    #[test]
    fn knight_move_on_empty_grid() {
        let grid = OccupancyGrid::new(geom(6, 6), Occupancy::Free);
        let dg = distance_transform(&grid, true).unwrap();
        let field = build_heuristic(&dg, (0, 0), Connectivity::Sixteen, 0.2, 1.0).unwrap();
        assert!((field.cost_at(2, 1) - 5f64.sqrt() * 0.1).abs() < 1e-12);
        assert_eq!(field.cost_at(0, 0), 0.0);
        assert_eq!(field.h(LatticeState::new(0, 0, 5)), 0.0);
        assert_eq!(field.predecessor(2, 1), Some((0, 0)));
        assert!(field.alpha(0, 0).is_none());
        assert_eq!(field.h(LatticeState::new(-1, 0, 0)), f64::INFINITY);
    }

    #[test]
    fn inflated_cells_are_infinite() {
        let mut grid = OccupancyGrid::new(geom(10, 10), Occupancy::Free);
        grid.set(5, 5, Occupancy::Occupied);
        let dg = distance_transform(&grid, true).unwrap();
        let field = build_heuristic(&dg, (0, 0), Connectivity::Sixteen, 0.15, 1.0).unwrap();
        assert_eq!(field.h(LatticeState::new(5, 5, 0)), f64::INFINITY);
        assert_eq!(field.h(LatticeState::new(5, 6, 0)), f64::INFINITY);
        assert!(field.h(LatticeState::new(5, 7, 0)).is_finite());
        assert!(matches!(
            build_heuristic(&dg, (5, 6), Connectivity::Eight, 0.15, 1.0),
            Err(HeuristicError::InvalidGoal { .. })
        ));
        assert!(build_heuristic(&dg, (10, 0), Connectivity::Eight, 0.15, 1.0).is_err());
    }

    #[test]
    fn wall_with_gap_routes_through_gap() {
        // Inflation makes the wall three cells thick, so no 16-connected move can hop it.
        let mut grid = OccupancyGrid::new(geom(21, 15), Occupancy::Free);
        for iy in 0..15 {
            if !(5..=9).contains(&iy) {
                grid.set(10, iy, Occupancy::Occupied);
            }
        }
        let dg = distance_transform(&grid, true).unwrap();
        let field = build_heuristic(&dg, (2, 7), Connectivity::Sixteen, 0.15, 1.0 / 0.7).unwrap();
        let want = oracle(&dg, (2, 7), Connectivity::Sixteen, 0.15, 1.0 / 0.7);
        for (a, b) in field.costs().iter().zip(&want) {
            assert!((a - b).abs() < 1e-9 || (a.is_infinite() && b.is_infinite()));
        }
        for iy in 0..15 {
            let (mut x, mut y) = (18usize, iy);
            if field.cost_at(x, y).is_infinite() {
                continue;
            }
            while let Some((px, py)) = field.predecessor(x, y) {
                if x.min(px) <= 10 && x.max(px) >= 10 {
                    assert!((5..=9).contains(&y) && (5..=9).contains(&py), "row {iy} bypassed the gap");
                }
                (x, y) = (px, py);
            }
            assert_eq!((x, y), (2, 7));
        }
    }

    #[test]
    fn matches_oracle_and_certifies_optimality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..8 {
            let conn = if trial % 2 == 0 {
                Connectivity::Eight
            } else {
                Connectivity::Sixteen
            };
            let mut grid = OccupancyGrid::new(geom(18, 14), Occupancy::Free);
            for iy in 0..14 {
                for ix in 0..18 {
                    if rng.gen_bool(0.2) {
                        grid.set(ix, iy, Occupancy::Occupied);
                    }
                }
            }
            grid.set(1, 1, Occupancy::Free);
            let dg = distance_transform(&grid, true).unwrap();
            let field = build_heuristic(&dg, (1, 1), conn, 0.05, 2.0).unwrap();
            let want = oracle(&dg, (1, 1), conn, 0.05, 2.0);
            for (a, b) in field.costs().iter().zip(&want) {
                assert!((a - b).abs() < 1e-9 || (a.is_infinite() && b.is_infinite()));
            }
            let mut alphas = std::collections::HashSet::new();
            for iy in 0..14usize {
                for ix in 0..18usize {
                    if field.cost_at(ix, iy).is_infinite() {
                        continue;
                    }
                    if let Some(a) = field.alpha(ix as i32, iy as i32) {
                        alphas.insert(a.to_bits());
                    }
                    let mut steps = 0;
                    let (mut x, mut y) = (ix, iy);
                    while let Some(p) = field.predecessor(x, y) {
                        (x, y) = p;
                        steps += 1;
                        assert!(steps <= 18 * 14);
                    }
                    assert_eq!((x, y), (1, 1));
                }
            }
            assert!(alphas.len() <= conn.moves().len());
        }
    }

    #[test]
    fn pfm_dump() {
        let grid = OccupancyGrid::new(geom(4, 3), Occupancy::Free);
        let dg = distance_transform(&grid, true).unwrap();
        let field = build_heuristic(&dg, (0, 0), Connectivity::Eight, 0.1, 1.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        field.write_debug_pfm(dir.path(), "h").unwrap();
        let bytes = std::fs::read(dir.path().join("h_cost.pfm")).unwrap();
        let header = b"Pf\n4 3\n-1.0\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 12 * 4);
    }
}
