//! Threaded execution: EDG updates, global planning and control run on their own threads
//! and exchange immutable snapshots through [`SnapshotCell`]s.
//!
//! Time is still simulated. The control thread owns the clock and publishes the current
//! tick; it advances at most `speedup` times faster than wall time and never waits for
//! the other tasks, which act on whatever tick they observe. Interleaving therefore
//! depends on scheduling, so runs are not bit-reproducible; use
//! [`crate::pipeline::simulate`] for that.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use crate::geometry::Pose2;
use crate::pipeline::{apply_due_edits, check_endpoints, LogEntry, MapSnapshot, Outcome, Pipeline, PipelineConfig, PipelineError, PlanSnapshot, RunResult, Scenario};
use crate::planner::{GlobalPath, PlanError, SearchStats};
use crate::primitives::PrimitiveSet;
use crate::optimizer::OptimizeStatus;

/// Holds the newest value of a snapshot; readers get an `Arc` and never block writers
/// for longer than a pointer swap.
#[derive(Debug)]
pub struct SnapshotCell<T> {
    inner: Mutex<Arc<T>>,
}

impl<T> SnapshotCell<T> {
    pub fn new(value: T) -> Self {
        Self {
            inner: Mutex::new(Arc::new(value)),
        }
    }

    pub fn load(&self) -> Arc<T> {
        self.inner.lock().expect("snapshot lock").clone()
    }

    pub fn store(&self, value: T) {
        *self.inner.lock().expect("snapshot lock") = Arc::new(value);
    }
}

#[derive(Debug, Clone)]
enum PlannerState {
    Pending,
    Ready {
        path: Arc<GlobalPath>,
        stats: SearchStats,
        replans: usize,
    },
    NoPath,
}

struct Shared {
    tick: AtomicU64,
    stop: AtomicBool,
    map: SnapshotCell<MapSnapshot>,
    robot: SnapshotCell<Pose2>,
    plan: SnapshotCell<PlannerState>,
}

impl Shared {
    fn wait_for_tick(&self, tick: u64) -> bool {
        while self.tick.load(Ordering::Acquire) < tick {
            if self.stop.load(Ordering::Acquire) {
                return false;
            }
            thread::sleep(Duration::from_micros(200));
        }
        !self.stop.load(Ordering::Acquire)
    }
}

/// Runs `scenario` with one thread per task. `speedup` bounds simulated seconds per
/// wall-clock second.
pub fn simulate_threaded(
    scenario: &Scenario,
    prims: Arc<PrimitiveSet>,
    cfg: &PipelineConfig,
    speedup: f64,
) -> Result<RunResult, PipelineError> {
    if !(speedup > 0.0) {
        return Err(PipelineError::Config(format!("speedup {speedup} must be positive")));
    }
    let (edg_every, global_every, local_every) = cfg.ticks()?;
    check_endpoints(scenario)?;
    let shared = Arc::new(Shared {
        tick: AtomicU64::new(0),
        stop: AtomicBool::new(false),
        map: SnapshotCell::new(MapSnapshot::build(scenario.world.clone(), 0, cfg)?),
        robot: SnapshotCell::new(scenario.start),
        plan: SnapshotCell::new(PlannerState::Pending),
    });

    let edg = {
        let shared = shared.clone();
        let cfg = cfg.clone();
        let mut world = scenario.world.clone();
        let mut edits = scenario.edits.clone();
        edits.sort_by(|a, b| a.time.total_cmp(&b.time));
        thread::spawn(move || -> Result<(), PipelineError> {
            let mut next = 0;
            let mut version = 0;
            let mut tick = 0;
            while next < edits.len() && shared.wait_for_tick(tick) {
                let t = shared.tick.load(Ordering::Acquire) as f64 * cfg.sim_dt;
                if apply_due_edits(&mut world, &edits, &mut next, t) {
                    version += 1;
                    shared.map.store(MapSnapshot::build(world.clone(), version, &cfg)?);
                }
                tick += edg_every;
            }
            Ok(())
        })
    };

    let planner = {
        let shared = shared.clone();
        let mut pipe = Pipeline::new(cfg.clone(), prims.clone(), scenario.goal);
        let sim_dt = cfg.sim_dt;
        thread::spawn(move || {
            let mut due = 0;
            let mut seen_version = u64::MAX;
            loop {
                if shared.stop.load(Ordering::Acquire) {
                    return;
                }
                let now = shared.tick.load(Ordering::Acquire);
                let map = shared.map.load();
                let new_map = map.version != seen_version;
                let blocked = new_map && pipe.path_blocked(&map);
                if now >= due || blocked {
                    seen_version = map.version;
                    let robot = *shared.robot.load();
                    match pipe.global_step(robot, &map) {
                        Ok(()) => {
                            if let Some(path) = pipe.global_path() {
                                shared.plan.store(PlannerState::Ready {
                                    path,
                                    stats: pipe.last_stats().unwrap_or_default(),
                                    replans: pipe.replans(),
                                });
                            }
                        }
                        Err(PlanError::InvalidStart(_)) if pipe.global_path().is_some() => {}
                        Err(_) => shared.plan.store(PlannerState::NoPath),
                    }
                    due = now + global_every;
                } else {
                    thread::sleep(Duration::from_secs_f64((sim_dt * 0.2).min(0.002)));
                }
            }
        })
    };

    let result = control_loop(scenario, prims, cfg, speedup, local_every, &shared);
    shared.stop.store(true, Ordering::Release);
    let edg_result = edg.join().map_err(|_| PipelineError::Config("EDG thread panicked".into()))?;
    planner
        .join()
        .map_err(|_| PipelineError::Config("planner thread panicked".into()))?;
    edg_result?;
    result
}

fn control_loop(
    scenario: &Scenario,
    prims: Arc<PrimitiveSet>,
    cfg: &PipelineConfig,
    speedup: f64,
    local_every: u64,
    shared: &Shared,
) -> Result<RunResult, PipelineError> {
    let mut local = Pipeline::new(cfg.clone(), prims, scenario.goal);
    let wall0 = Instant::now();
    let max_ticks = (cfg.max_time / cfg.sim_dt).round() as u64;
    let mut pose = scenario.start;
    let mut speed = 0.0;
    let mut snapshot: Option<PlanSnapshot> = None;
    let mut log = Vec::new();
    let mut min_clearance = f64::INFINITY;
    let mut non_converged = 0;
    let mut first: Option<(SearchStats, f64)> = None;
    let mut replans = 0;
    let mut last_path: Option<Arc<GlobalPath>> = None;

    let done = |outcome: Outcome, t: f64, log: Vec<LogEntry>, min_c: f64, replans, nc, first: Option<(SearchStats, f64)>| RunResult {
        outcome,
        travel_time: t,
        min_clearance: min_c,
        replans,
        failure_time: (outcome != Outcome::Ok).then_some(t),
        non_converged_steps: nc,
        first_plan: first.map(|f| f.0),
        first_path_cost: first.map(|f| f.1),
        log,
    };

    for tick in 0..=max_ticks {
        let t = tick as f64 * cfg.sim_dt;
        let wall_target = Duration::from_secs_f64(t / speedup);
        if let Some(wait) = wall_target.checked_sub(wall0.elapsed()) {
            thread::sleep(wait);
        }
        if let Some(snap) = &snapshot {
            if let Some((p, v)) = snap.command(t - snap.timestamp) {
                pose = p;
                speed = v;
            }
        }
        shared.robot.store(pose);
        shared.tick.store(tick, Ordering::Release);
        let map = shared.map.load();
        let clearance = map.world_dg.cell_distance_at(pose.position()).unwrap_or(0.0);
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
            return Ok(done(Outcome::Failed, t, log, min_clearance, replans, non_converged, first));
        }
        if tick > 0 && speed <= 1e-3 && pose.position().distance(scenario.goal.position()) <= cfg.goal_tolerance {
            return Ok(done(Outcome::Ok, t, log, min_clearance, replans, non_converged, first));
        }
        let plan = shared.plan.load();
        let fresh = match &*plan {
            PlannerState::Pending => continue,
            PlannerState::NoPath => {
                return Ok(done(Outcome::NoPath, t, log, min_clearance, replans, non_converged, first));
            }
            PlannerState::Ready { path, stats, replans: r } => {
                replans = *r;
                first.get_or_insert((*stats, path.total_cost));
                let fresh = !last_path.as_ref().is_some_and(|p| Arc::ptr_eq(p, path));
                if fresh {
                    local.adopt_global(path.clone());
                    last_path = Some(path.clone());
                }
                fresh
            }
        };
        if fresh || tick % local_every == 0 {
            let snap = local.local_step(t, pose, speed, &map)?;
            if matches!(snap.optimize_status, Some(OptimizeStatus::NonConverged)) {
                non_converged += 1;
            }
            if snap.profile.is_some() {
                snapshot = Some(snap);
            } else if snap.chain.len() < 3 {
                speed = 0.0;
                snapshot = None;
            }
        }
    }
    Ok(done(Outcome::Failed, cfg.max_time, log, min_clearance, replans, non_converged, first))
}
