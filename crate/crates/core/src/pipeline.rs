//! The plan / optimize / profile loop and a kinematic simulator.
//!
//! Three periodic tasks share immutable snapshots: the distance-grid update (40 ms),
//! global planning (250 ms, or immediately when the current path becomes blocked) and
//! local optimization (every control step). [`simulate`] interleaves them on a
//! simulated clock with 10 ms ticks, which keeps runs bit-reproducible;
//! [`crate::runtime`] runs the same tasks on threads.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Pose2, WorldPoint};
use crate::gridmap::{distance_transform, DistanceGrid, Footprint, GridError, GridGeometry, Occupancy, OccupancyGrid};
use crate::heuristic::{build_heuristic, Connectivity, HeuristicField};
use crate::optimizer::{optimize, resample_polyline, OptimizeStatus, OptimizerConfig};
use crate::planner::{plan, pose_state, GlobalPath, PlanError, PlannerConfig, SearchStats};
use crate::primitives::PrimitiveSet;
use crate::velocity::{
    compute_mvc, integrate_profile, mvc_value, spline_smooth, KinodynamicLimits, SmoothPath,
    VelocityProfile, DEFAULT_MVC_STEP,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid pipeline configuration: {0}")]
    Config(String),
    #[error("{0} pose lies outside the map")]
    OutsideMap(&'static str),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Seconds between global plans.
    pub global_cycle: f64,
    /// Seconds between distance-grid updates.
    pub edg_cycle: f64,
    /// Seconds between local optimizations.
    pub local_cycle: f64,
    /// Simulator integration step, seconds.
    pub sim_dt: f64,
    /// Side of the square local window, meters.
    pub local_window: f64,
    pub chain_spacing: f64,
    pub chain_length: f64,
    pub global_resolution: f64,
    pub goal_tolerance: f64,
    /// Simulated time after which a run that has not arrived counts as failed.
    pub max_time: f64,
    pub optimize_local: bool,
    pub unknown_is_obstacle: bool,
    pub connectivity: Connectivity,
    pub planner: PlannerConfig,
    pub optimizer: OptimizerConfig,
    pub limits: KinodynamicLimits,
    pub footprint: Footprint,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            global_cycle: 0.25,
            edg_cycle: 0.04,
            local_cycle: 0.1,
            sim_dt: 0.01,
            local_window: 8.0,
            chain_spacing: 0.1,
            chain_length: 3.0,
            global_resolution: 0.1,
            goal_tolerance: 0.1,
            max_time: 300.0,
            optimize_local: true,
            unknown_is_obstacle: true,
            connectivity: Connectivity::Sixteen,
            planner: PlannerConfig::default(),
            optimizer: OptimizerConfig::default(),
            limits: KinodynamicLimits::default(),
            footprint: Footprint::default(),
        }
    }
}

impl PipelineConfig {
    /// Task periods as whole simulator ticks.
    pub(crate) fn ticks(&self) -> Result<(u64, u64, u64), PipelineError> {
        let per = |p: f64, name: &str| {
            let t = (p / self.sim_dt).round();
            if !(p > 0.0) || t < 1.0 || (t * self.sim_dt - p).abs() > 1e-9 {
                Err(PipelineError::Config(format!(
                    "{name} {p} s is not a positive multiple of the {} s step",
                    self.sim_dt
                )))
            } else {
                Ok(t as u64)
            }
        };
        Ok((
            per(self.edg_cycle, "edg_cycle")?,
            per(self.global_cycle, "global_cycle")?,
            per(self.local_cycle, "local_cycle")?,
        ))
    }
}

/// A timed occupancy edit over an inclusive rectangle of world-grid cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEdit {
    pub time: f64,
    pub min: (usize, usize),
    pub max: (usize, usize),
    pub value: Occupancy,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub world: OccupancyGrid,
    pub start: Pose2,
    pub goal: Pose2,
    pub edits: Vec<MapEdit>,
}

/// World occupancy with its derived distance grids; immutable once built.
#[derive(Debug, Clone)]
pub struct MapSnapshot {
    pub version: u64,
    pub world: OccupancyGrid,
    /// Full-resolution distances, used for execution checks and clearance.
    pub world_dg: DistanceGrid,
    /// Distances at the lattice resolution, used by the global planner.
    pub global_dg: DistanceGrid,
}

impl MapSnapshot {
    pub fn build(world: OccupancyGrid, version: u64, cfg: &PipelineConfig) -> Result<Self, PipelineError> {
        let wg = world.geometry();
        let ext = wg.extent();
        let gg = GridGeometry::new(
            (ext.x / cfg.global_resolution).round() as usize,
            (ext.y / cfg.global_resolution).round() as usize,
            cfg.global_resolution,
            wg.origin(),
        )?;
        let world_dg = distance_transform(&world, cfg.unknown_is_obstacle)?;
        let global_dg = if gg == *wg {
            world_dg.clone()
        } else {
            distance_transform(&world.resample(gg, Occupancy::Occupied), cfg.unknown_is_obstacle)?
        };
        Ok(Self {
            version,
            world,
            world_dg,
            global_dg,
        })
    }

    /// Square window of the world grid centered near `center`, aligned to world cells;
    /// space beyond the map is occupied.
    pub fn local_window(&self, center: WorldPoint, side: f64, cfg: &PipelineConfig) -> Result<DistanceGrid, PipelineError> {
        let wg = self.world.geometry();
        let res = wg.resolution();
        let cells = (side / res).round() as usize;
        let (cx, cy) = wg.world_to_cell_unchecked(center);
        let half = (cells / 2) as i64;
        let origin = WorldPoint::new(
            wg.origin().x + (cx - half) as f64 * res,
            wg.origin().y + (cy - half) as f64 * res,
        );
        let geom = GridGeometry::new(cells, cells, res, origin)?;
        let crop = self.world.resample(geom, Occupancy::Occupied);
        Ok(distance_transform(&crop, cfg.unknown_is_obstacle)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "OK")]
    Ok,
    #[serde(rename = "NO_PATH")]
    NoPath,
    #[serde(rename = "FAILED")]
    Failed,
    #[serde(rename = "NON_CONVERGED")]
    NonConverged,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Ok => "OK",
            Outcome::NoPath => "NO_PATH",
            Outcome::Failed => "FAILED",
            Outcome::NonConverged => "NON_CONVERGED",
        })
    }
}

impl std::str::FromStr for Outcome {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "OK" => Ok(Outcome::Ok),
            "NO_PATH" => Ok(Outcome::NoPath),
            "FAILED" => Ok(Outcome::Failed),
            "NON_CONVERGED" => Ok(Outcome::NonConverged),
            other => Err(format!("unknown outcome `{other}`")),
        }
    }
}

/// Output of one local step.
#[derive(Debug, Clone)]
pub struct PlanSnapshot {
    pub timestamp: f64,
    pub global: Option<Arc<GlobalPath>>,
    /// Local chain sampled from the global path, and after optimization.
    pub chain_initial: Vec<WorldPoint>,
    pub chain: Vec<WorldPoint>,
    pub smooth: Option<SmoothPath>,
    pub profile: Option<VelocityProfile>,
    pub stats: Option<SearchStats>,
    pub optimize_status: Option<OptimizeStatus>,
    /// The chain ends at the global path's end.
    pub reaches_goal: bool,
    pub failure: Option<Outcome>,
}

impl PlanSnapshot {
    fn failed(timestamp: f64, outcome: Outcome, global: Option<Arc<GlobalPath>>) -> Self {
        Self {
            timestamp,
            global,
            chain_initial: Vec::new(),
            chain: Vec::new(),
            smooth: None,
            profile: None,
            stats: None,
            optimize_status: None,
            reaches_goal: false,
            failure: Some(outcome),
        }
    }

    /// Pose and speed `dt` seconds after this snapshot was taken.
    pub fn command(&self, dt: f64) -> Option<(Pose2, f64)> {
        let (smooth, profile) = (self.smooth.as_ref()?, self.profile.as_ref()?);
        let (s, v) = profile.state_at_time(dt);
        let p = smooth.point_at_s(s);
        Some((Pose2::new(p.x, p.y, smooth.heading_at_s(s)), v))
    }
}

#[derive(Debug, Clone)]
struct ActivePath {
    path: Arc<GlobalPath>,
    points: Vec<WorldPoint>,
    /// Index of the pose closest to the robot at the last local step.
    progress: usize,
}

/// Planning state carried across cycles.
pub struct Pipeline {
    cfg: PipelineConfig,
    prims: Arc<PrimitiveSet>,
    goal: Pose2,
    active: Option<ActivePath>,
    field: Option<(u64, Arc<HeuristicField>)>,
    last_stats: Option<SearchStats>,
    replans: usize,
}

/// Poses searched ahead of the last progress index when projecting the robot.
const PROJECTION_WINDOW: usize = 400;

impl Pipeline {
    pub fn new(cfg: PipelineConfig, prims: Arc<PrimitiveSet>, goal: Pose2) -> Self {
        Self {
            cfg,
            prims,
            goal,
            active: None,
            field: None,
            last_stats: None,
            replans: 0,
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn replans(&self) -> usize {
        self.replans
    }

    pub fn global_path(&self) -> Option<Arc<GlobalPath>> {
        self.active.as_ref().map(|a| a.path.clone())
    }

    pub fn last_stats(&self) -> Option<SearchStats> {
        self.last_stats
    }

    /// Switches the local stage to a path planned elsewhere; a no-op for the current path.
    pub fn adopt_global(&mut self, path: Arc<GlobalPath>) {
        if self.active.as_ref().is_some_and(|a| Arc::ptr_eq(&a.path, &path)) {
            return;
        }
        self.active = Some(ActivePath {
            points: dedup_points(&path.points()),
            path,
            progress: 0,
        });
    }

    /// Whether the remaining global path collides with the given map.
    pub fn path_blocked(&self, map: &MapSnapshot) -> bool {
        let Some(a) = &self.active else {
            return false;
        };
        a.path.poses[a.progress..]
            .iter()
            .any(|p| !self.cfg.footprint.is_pose_free(&map.global_dg, *p))
    }

    /// Runs the global planner from the robot's lattice state. Keeps the previous path
    /// when the robot's own lattice cell is not a valid start.
    pub fn global_step(&mut self, robot: Pose2, map: &MapSnapshot) -> Result<(), PlanError> {
        let g = *map.global_dg.geometry();
        let n = self.prims.num_angles();
        let start = pose_state(&g, robot, n).ok_or(PlanError::InvalidStart(Default::default()))?;
        let goal = pose_state(&g, self.goal, n).ok_or(PlanError::InvalidGoal(Default::default()))?;
        let field = match &self.field {
            Some((v, f)) if *v == map.version => f.clone(),
            _ => {
                let f = build_heuristic(
                    &map.global_dg,
                    (goal.ix as usize, goal.iy as usize),
                    self.cfg.connectivity,
                    self.cfg.footprint.inscribed_radius(),
                    1.0 / self.cfg.limits.v_max,
                )
                .map_err(|_| PlanError::InvalidGoal(goal))?;
                let f = Arc::new(f);
                self.field = Some((map.version, f.clone()));
                f
            }
        };
        self.replans += 1;
        match plan(
            &map.global_dg,
            &self.prims,
            &field,
            &self.cfg.footprint,
            start,
            goal,
            &self.cfg.planner,
        ) {
            Ok(out) => {
                self.last_stats = Some(out.stats);
                let points = dedup_points(&out.path.points());
                self.active = Some(ActivePath {
                    path: Arc::new(out.path),
                    points,
                    progress: 0,
                });
                Ok(())
            }
            Err(PlanError::InvalidStart(_)) if self.active.is_some() => Ok(()),
            Err(e) => {
                if let PlanError::NoPath { stats } = &e {
                    self.last_stats = Some(*stats);
                }
                Err(e)
            }
        }
    }

    /// Extracts the local chain, optimizes it against the local window and profiles it.
    pub fn local_step(&mut self, t: f64, robot: Pose2, speed: f64, map: &MapSnapshot) -> Result<PlanSnapshot, PipelineError> {
        let Some(active) = self.active.as_mut() else {
            return Ok(PlanSnapshot::failed(t, Outcome::NoPath, None));
        };
        let pos = robot.position();
        let lo = active.progress;
        let hi = (lo + PROJECTION_WINDOW).min(active.points.len());
        let closest = (lo..hi)
            .min_by(|&a, &b| {
                active.points[a]
                    .distance(pos)
                    .total_cmp(&active.points[b].distance(pos))
            })
            .unwrap_or(lo);
        active.progress = closest;
        let ahead = &active.points[closest..];
        let mut chain = resample_polyline(ahead, self.cfg.chain_spacing, self.cfg.chain_length);
        let remaining: f64 = ahead.windows(2).map(|w| w[0].distance(w[1])).sum();
        let reaches_goal = remaining <= self.cfg.chain_length + 1e-9;
        chain[0] = pos;
        chain = dedup_points(&chain);
        if chain.len() == 1 && pos.distance(*ahead.last().unwrap()) > 1e-6 {
            // Projected onto the final pose but not on it yet.
            chain.push(*ahead.last().unwrap());
        }
        if chain.len() == 2 {
            let mid = (chain[0] + chain[1]) * 0.5;
            chain.insert(1, mid);
        }
        let global = Some(active.path.clone());
        if chain.len() < 3 {
            // Already on the path's end point.
            let mut snap = PlanSnapshot::failed(t, Outcome::Ok, global);
            snap.failure = None;
            snap.reaches_goal = reaches_goal;
            snap.chain_initial = chain.clone();
            snap.chain = chain;
            return Ok(snap);
        }
        let chain_initial = chain.clone();
        let mut status = None;
        if self.cfg.optimize_local {
            let local = map.local_window(pos, self.cfg.local_window, &self.cfg)?;
            if let Ok((opt, report)) = optimize(&chain, &local, &self.cfg.optimizer) {
                status = Some(report.status);
                chain = opt;
            }
        }
        let Ok(smooth) = spline_smooth(&chain) else {
            return Ok(PlanSnapshot::failed(t, Outcome::NonConverged, global));
        };
        let lim = self.cfg.limits;
        let mvc = compute_mvc(&smooth, &lim, DEFAULT_MVC_STEP);
        let v_start = speed.min(mvc.v[0]);
        let v_end = if reaches_goal { 0.0 } else { *mvc.v.last().unwrap() };
        let profile = integrate_profile(&mvc, &lim, v_start, v_end).ok();
        Ok(PlanSnapshot {
            timestamp: t,
            global,
            chain_initial,
            chain,
            smooth: Some(smooth),
            profile,
            stats: self.last_stats,
            optimize_status: status,
            reaches_goal,
            failure: None,
        })
    }

    /// Global planning when `replan` is set or no path exists yet, then a local step.
    pub fn step(&mut self, t: f64, robot: Pose2, speed: f64, map: &MapSnapshot, replan: bool) -> Result<PlanSnapshot, PipelineError> {
        if replan || self.active.is_none() || self.path_blocked(map) {
            if let Err(e) = self.global_step(robot, map) {
                let outcome = match e {
                    PlanError::NoPath { .. } | PlanError::InvalidStart(_) | PlanError::InvalidGoal(_) => Outcome::NoPath,
                    _ => Outcome::Failed,
                };
                if self.active.is_none() || matches!(e, PlanError::NoPath { .. }) {
                    self.active = None;
                    return Ok(PlanSnapshot::failed(t, outcome, None));
                }
            }
        }
        self.local_step(t, robot, speed, map)
    }
}

fn dedup_points(points: &[WorldPoint]) -> Vec<WorldPoint> {
    let mut out: Vec<WorldPoint> = Vec::with_capacity(points.len());
    for &p in points {
        if out.last().is_none_or(|q| q.distance(p) > 1e-6) {
            out.push(p);
        }
    }
    out
}

/// Applies edits (sorted by time) from `*next` up to time `t`; true if any applied.
pub(crate) fn apply_due_edits(world: &mut OccupancyGrid, edits: &[MapEdit], next: &mut usize, t: f64) -> bool {
    let g = *world.geometry();
    let start = *next;
    while *next < edits.len() && edits[*next].time <= t + 1e-9 {
        let e = &edits[*next];
        for iy in e.min.1..=e.max.1.min(g.height() - 1) {
            for ix in e.min.0..=e.max.0.min(g.width() - 1) {
                world.set(ix, iy, e.value);
            }
        }
        *next += 1;
    }
    *next > start
}

pub(crate) fn check_endpoints(scenario: &Scenario) -> Result<(), PipelineError> {
    let wg = scenario.world.geometry();
    if wg.world_to_cell(scenario.start.position()).is_none() {
        return Err(PipelineError::OutsideMap("start"));
    }
    if wg.world_to_cell(scenario.goal.position()).is_none() {
        return Err(PipelineError::OutsideMap("goal"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub clearance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub outcome: Outcome,
    /// Seconds until arrival, or until the run stopped.
    pub travel_time: f64,
    pub min_clearance: f64,
    pub replans: usize,
    pub failure_time: Option<f64>,
    pub non_converged_steps: usize,
    /// Statistics of the first global plan.
    pub first_plan: Option<SearchStats>,
    pub first_path_cost: Option<f64>,
    pub log: Vec<LogEntry>,
}

pub fn format_log(log: &[LogEntry]) -> String {
    let mut out = String::from("t,x,y,theta,v,clearance\n");
    for e in log {
        let _ = writeln!(
            out,
            "{:.2},{:.6},{:.6},{:.6},{:.6},{:.4}",
            e.t, e.x, e.y, e.theta, e.v, e.clearance
        );
    }
    out
}

/// Deterministic run on a simulated clock. The robot follows the newest snapshot's
/// profile exactly (feedforward tracking); a pose whose footprint touches an occupied
/// cell ends the run as FAILED.
pub fn simulate(scenario: &Scenario, prims: Arc<PrimitiveSet>, cfg: &PipelineConfig) -> Result<RunResult, PipelineError> {
    let (edg_every, global_every, local_every) = cfg.ticks()?;
    check_endpoints(scenario)?;
    let mut world = scenario.world.clone();
    let mut edits = scenario.edits.clone();
    edits.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut next_edit = 0;
    let mut version = 0u64;
    let mut map = Arc::new(MapSnapshot::build(world.clone(), version, cfg)?);
    let mut pipe = Pipeline::new(cfg.clone(), prims, scenario.goal);

    let mut pose = scenario.start;
    let mut speed = 0.0;
    let mut snapshot: Option<PlanSnapshot> = None;
    let mut log = Vec::new();
    let mut min_clearance = f64::INFINITY;
    let mut non_converged = 0;
    let mut first_plan = None;
    let mut first_cost = None;
    let max_ticks = (cfg.max_time / cfg.sim_dt).round() as u64;

    let finish = |outcome, t: f64, log: Vec<LogEntry>, min_c: f64, pipe: &Pipeline, nc, fp, fc| RunResult {
        outcome,
        travel_time: t,
        min_clearance: min_c,
        replans: pipe.replans(),
        failure_time: (outcome != Outcome::Ok).then_some(t),
        non_converged_steps: nc,
        first_plan: fp,
        first_path_cost: fc,
        log,
    };

    for tick in 0..=max_ticks {
        let t = tick as f64 * cfg.sim_dt;
        if let Some(snap) = &snapshot {
            if let Some((p, v)) = snap.command(t - snap.timestamp) {
                pose = p;
                speed = v;
            }
        }
        let clearance = map
            .world_dg
            .cell_distance_at(pose.position())
            .unwrap_or(0.0);
        min_clearance = min_clearance.min(clearance);
        log.push(LogEntry {
            t,
            x: pose.x,
            y: pose.y,
            theta: pose.theta,
            v: speed,
            clearance,
        });
        if !cfg.footprint.is_pose_free(&map.world_dg, pose) {
            return Ok(finish(Outcome::Failed, t, log, min_clearance, &pipe, non_converged, first_plan, first_cost));
        }
        if pose.position().distance(scenario.goal.position()) <= cfg.goal_tolerance && speed <= 1e-3 && tick > 0 {
            return Ok(finish(Outcome::Ok, t, log, min_clearance, &pipe, non_converged, first_plan, first_cost));
        }

        let mut map_changed = false;
        if tick % edg_every == 0 {
            if apply_due_edits(&mut world, &edits, &mut next_edit, t) {
                version += 1;
                map = Arc::new(MapSnapshot::build(world.clone(), version, cfg)?);
                map_changed = true;
            }
        }
        let global_due = tick % global_every == 0;
        let blocked = map_changed && pipe.path_blocked(&map);
        if global_due || blocked || tick % local_every == 0 {
            let snap = pipe.step(t, pose, speed, &map, global_due || blocked)?;
            if first_plan.is_none() {
                first_plan = pipe.last_stats();
                first_cost = pipe.global_path().map(|p| p.total_cost);
            }
            if let Some(outcome) = snap.failure {
                return Ok(finish(outcome, t, log, min_clearance, &pipe, non_converged, first_plan, first_cost));
            }
            if matches!(snap.optimize_status, Some(OptimizeStatus::NonConverged)) {
                non_converged += 1;
            }
            if snap.profile.is_some() {
                snapshot = Some(snap);
            } else if snap.chain.len() < 3 {
                // On the path's end point: hold position.
                speed = 0.0;
                snapshot = None;
            }
        }
    }
    Ok(finish(Outcome::Failed, cfg.max_time, log, min_clearance, &pipe, non_converged, first_plan, first_cost))
}

/// Arrival speed cap and local-chain helpers exposed for diagnostics.
pub fn mvc_at_start(smooth: &SmoothPath, lim: &KinodynamicLimits) -> f64 {
    mvc_value(smooth.curvature_at_s(0.0).abs(), lim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::velocity::trapezoid_time;

    fn open_scenario() -> Scenario {
        let g = GridGeometry::new(200, 80, 0.05, WorldPoint::default()).unwrap();
        Scenario {
            name: "open".into(),
            world: OccupancyGrid::new(g, Occupancy::Free),
            start: Pose2::new(1.05, 2.05, 0.0),
            goal: Pose2::new(8.05, 2.05, 0.0),
            edits: Vec::new(),
        }
    }

    #[test]
    fn straight_run_matches_trapezoid() {
        let sc = open_scenario();
        let r = simulate(&sc, Arc::new(PrimitiveSet::builtin(0.1)), &PipelineConfig::default()).unwrap();
        assert_eq!(r.outcome, Outcome::Ok);
        let want = trapezoid_time(7.0, 0.7, 0.5);
        assert!((r.travel_time - want).abs() / want < 0.02, "{} vs {want}", r.travel_time);
        assert!(r.min_clearance >= Footprint::default().inscribed_radius());
        for w in r.log.windows(2) {
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn global_path_is_reused_within_cycle() {
        let sc = open_scenario();
        let cfg = PipelineConfig::default();
        let map = MapSnapshot::build(sc.world.clone(), 0, &cfg).unwrap();
        let mut pipe = Pipeline::new(cfg, Arc::new(PrimitiveSet::builtin(0.1)), sc.goal);
        pipe.step(0.0, sc.start, 0.0, &map, true).unwrap();
        let first = pipe.global_path().unwrap();
        let snap = pipe.step(0.1, sc.start, 0.0, &map, false).unwrap();
        assert!(Arc::ptr_eq(&first, &pipe.global_path().unwrap()));
        assert_eq!(pipe.replans(), 1);
        let g = snap.global.unwrap();
        // The chain's far end lies on the global path.
        let end = *snap.chain_initial.last().unwrap();
        assert!(g.points().iter().any(|p| p.distance(end) < 0.051));
        assert!((snap.chain[0].distance(sc.start.position())) < 1e-12);
    }

    #[test]
    fn injected_obstacle_triggers_replan() {
        let mut sc = open_scenario();
        // A block dropped across the straight line at t = 1 s.
        sc.edits.push(MapEdit {
            time: 1.0,
            min: (100, 20),
            max: (110, 60),
            value: Occupancy::Occupied,
        });
        let cfg = PipelineConfig::default();
        let mut world = sc.world.clone();
        let map0 = MapSnapshot::build(world.clone(), 0, &cfg).unwrap();
        let mut pipe = Pipeline::new(cfg.clone(), Arc::new(PrimitiveSet::builtin(0.1)), sc.goal);
        pipe.step(0.0, sc.start, 0.0, &map0, true).unwrap();
        for iy in 20..=60 {
            for ix in 100..=110 {
                world.set(ix, iy, Occupancy::Occupied);
            }
        }
        let map1 = MapSnapshot::build(world, 1, &cfg).unwrap();
        assert!(pipe.path_blocked(&map1));
        pipe.step(0.1, sc.start, 0.0, &map1, false).unwrap();
        assert_eq!(pipe.replans(), 2);
        assert!(!pipe.path_blocked(&map1));
        let r = simulate(&sc, Arc::new(PrimitiveSet::builtin(0.1)), &cfg).unwrap();
        assert_eq!(r.outcome, Outcome::Ok, "{:?}", r.failure_time);
        assert!(r.log.iter().any(|e| (e.y - 2.05).abs() > 0.5));
    }

    #[test]
    fn u_turn_completes_and_is_reproducible() {
        let f = fixtures::u_turn();
        let sc = Scenario {
            name: f.name,
            world: f.world,
            start: f.start,
            goal: f.goal,
            edits: Vec::new(),
        };
        let prims = Arc::new(PrimitiveSet::builtin(0.1));
        let cfg = PipelineConfig::default();
        let a = simulate(&sc, prims.clone(), &cfg).unwrap();
        assert_eq!(a.outcome, Outcome::Ok, "failed at {:?}", a.failure_time);
        assert!(a.min_clearance >= cfg.footprint.inscribed_radius());
        let b = simulate(&sc, prims, &cfg).unwrap();
        assert_eq!(format_log(&a.log), format_log(&b.log));
    }

    #[test]
    fn bad_config_and_endpoints() {
        let sc = open_scenario();
        let cfg = PipelineConfig {
            edg_cycle: 0.015,
            ..Default::default()
        };
        let prims = Arc::new(PrimitiveSet::builtin(0.1));
        assert!(matches!(simulate(&sc, prims.clone(), &cfg), Err(PipelineError::Config(_))));
        let mut out = sc.clone();
        out.goal = Pose2::new(50.0, 1.0, 0.0);
        assert!(matches!(
            simulate(&out, prims.clone(), &PipelineConfig::default()),
            Err(PipelineError::OutsideMap("goal"))
        ));
        let mut walled = sc.clone();
        walled.world.fill_rect(WorldPoint::new(5.0, 0.0), WorldPoint::new(5.3, 4.0), Occupancy::Occupied);
        let r = simulate(&walled, prims, &PipelineConfig::default()).unwrap();
        assert_eq!(r.outcome, Outcome::NoPath);
    }
}
