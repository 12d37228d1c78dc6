//! Benchmark records, scenario and manifest files, and the batch commands behind the CLI.
//!
//! Records serialize to CSV with the fixed header [`RECORD_HEADER`] or to JSON; floats
//! use shortest round-trip formatting, so both forms parse back to identical values.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixtures;
use crate::geometry::{Pose2, WorldPoint};
use crate::gridmap::{distance_transform, Occupancy, OccupancyGrid};
use crate::heuristic::{build_heuristic, Connectivity};
use crate::mapio::{load_map, MapIoError};
use crate::optimizer::{min_interior_clearance, optimize, OptimizeReport, OptimizeStatus};
use crate::pipeline::{simulate, MapEdit, MapSnapshot, Outcome, PipelineConfig, PipelineError, RunResult, Scenario};
use crate::planner::{plan, pose_state, GlobalPath, PlanError, PlannerConfig};
use crate::primitives::{load_primitive_file, PrimitiveError, PrimitiveSet};
use crate::runtime::simulate_threaded;

pub const RECORD_HEADER: &str = "scenario_id,variant,expanded_states,graph_size,planning_time,branching_factor,path_cost,travel_time,min_clearance,outcome";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Map(#[from] MapIoError),
    #[error(transparent)]
    Primitives(#[from] PrimitiveError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl HarnessError {
    /// Process exit code: 2 for invalid input, 4 for internal errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Internal(_) => 4,
            _ => 2,
        }
    }
}

impl From<PipelineError> for HarnessError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Grid(_) | PipelineError::Config(_) | PipelineError::OutsideMap(_) => {
                HarnessError::Input(e.to_string())
            }
        }
    }
}

fn input<T>(msg: impl Into<String>) -> Result<T, HarnessError> {
    Err(HarnessError::Input(msg.into()))
}

/// One benchmark cell. Planning fields are zero and end-to-end fields empty when the
/// cell did not produce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub scenario_id: String,
    pub variant: String,
    pub expanded_states: u64,
    pub graph_size: u64,
    pub planning_time: f64,
    pub branching_factor: f64,
    pub path_cost: Option<f64>,
    pub travel_time: Option<f64>,
    pub min_clearance: Option<f64>,
    pub outcome: Outcome,
}

impl BenchmarkRecord {
    fn empty(scenario_id: &str, variant: &str, outcome: Outcome) -> Self {
        Self {
            scenario_id: scenario_id.to_string(),
            variant: variant.to_string(),
            expanded_states: 0,
            graph_size: 0,
            planning_time: 0.0,
            branching_factor: 0.0,
            path_cost: None,
            travel_time: None,
            min_clearance: None,
            outcome,
        }
    }
}

pub fn records_to_csv(records: &[BenchmarkRecord]) -> Result<String, HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let mut out = format!("{RECORD_HEADER}\n");
    for r in records {
        w.serialize(r).map_err(|e| HarnessError::Internal(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| HarnessError::Internal(e.to_string()))?;
    out.push_str(&String::from_utf8(body).map_err(|e| HarnessError::Internal(e.to_string()))?);
    Ok(out)
}

/// Parses CSV records; the header must match [`RECORD_HEADER`] exactly.
pub fn records_from_csv(text: &str) -> Result<Vec<BenchmarkRecord>, HarnessError> {
    let header = text.lines().next().unwrap_or("");
    if header.trim_end() != RECORD_HEADER {
        return input(format!("record header `{header}` does not match `{RECORD_HEADER}`"));
    }
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| HarnessError::Input(format!("record row {}: {e}", i + 1))))
        .collect()
}

pub fn records_to_json(records: &[BenchmarkRecord]) -> Result<String, HarnessError> {
    serde_json::to_string_pretty(records).map_err(|e| HarnessError::Internal(e.to_string()))
}

pub fn records_from_json(text: &str) -> Result<Vec<BenchmarkRecord>, HarnessError> {
    serde_json::from_str(text).map_err(|e| HarnessError::Input(format!("records: {e}")))
}

/// `fixture:<name>` or a path to a map sidecar file.
pub fn load_world(spec: &str) -> Result<(OccupancyGrid, Option<fixtures::Fixture>), HarnessError> {
    if let Some(name) = spec.strip_prefix("fixture:") {
        let f = fixtures::fixture(name).ok_or_else(|| HarnessError::Input(format!("unknown fixture `{name}`")))?;
        return Ok((f.world.clone(), Some(f)));
    }
    Ok((load_map(Path::new(spec))?, None))
}

/// `builtin` or a path to a primitive file; the builtin set uses `resolution`.
pub fn load_primitives(spec: &str, resolution: f64) -> Result<PrimitiveSet, HarnessError> {
    if spec == "builtin" {
        Ok(PrimitiveSet::builtin(resolution))
    } else {
        Ok(load_primitive_file(Path::new(spec))?)
    }
}

/// `x y theta`, separated by whitespace or commas.
pub fn parse_pose(text: &str) -> Result<Pose2, HarnessError> {
    let v: Vec<f64> = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| HarnessError::Input(format!("bad number `{s}` in pose `{text}`"))))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, theta] if v.iter().all(|c| c.is_finite()) => Ok(Pose2::new(x, y, theta)),
        _ => input(format!("pose `{text}` must be three finite numbers: x y theta")),
    }
}

/// Chain file: one `x y` vertex per line; `#` starts a comment.
pub fn parse_chain(text: &str) -> Result<Vec<WorldPoint>, HarnessError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| HarnessError::Input(format!("chain line {}: `{raw}` is not numeric", i + 1)))?;
        match v[..] {
            [x, y] if x.is_finite() && y.is_finite() => out.push(WorldPoint::new(x, y)),
            _ => return input(format!("chain line {}: expected `x y`, got `{raw}`", i + 1)),
        }
    }
    Ok(out)
}

pub fn format_chain(chain: &[WorldPoint]) -> String {
    let mut out = String::new();
    for p in chain {
        let _ = writeln!(out, "{} {}", p.x, p.y);
    }
    out
}

pub fn format_path(path: &GlobalPath) -> String {
    let mut out = String::from("# x y theta\n");
    for p in &path.poses {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.theta);
    }
    out
}

fn parse_bool(key: &str, v: &str) -> Result<bool, HarnessError> {
    match v {
        "true" | "on" | "1" | "yes" => Ok(true),
        "false" | "off" | "0" | "no" => Ok(false),
        _ => input(format!("`{key}` expects on/off, got `{v}`")),
    }
}

fn parse_num(key: &str, v: &str) -> Result<f64, HarnessError> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => input(format!("`{key}` expects a finite number, got `{v}`")),
    }
}

/// Applies one `key: value` configuration override. Returns false for unknown keys.
pub fn apply_override(cfg: &mut PipelineConfig, key: &str, value: &str) -> Result<bool, HarnessError> {
    let num = || parse_num(key, value);
    match key {
        "global_cycle" => cfg.global_cycle = num()?,
        "edg_cycle" => cfg.edg_cycle = num()?,
        "local_cycle" => cfg.local_cycle = num()?,
        "local_window" => cfg.local_window = num()?,
        "chain_spacing" => cfg.chain_spacing = num()?,
        "chain_length" => cfg.chain_length = num()?,
        "goal_tolerance" => cfg.goal_tolerance = num()?,
        "max_time" => cfg.max_time = num()?,
        "optimize_local" => cfg.optimize_local = parse_bool(key, value)?,
        "unknown_is_obstacle" => cfg.unknown_is_obstacle = parse_bool(key, value)?,
        "connectivity" => {
            cfg.connectivity = match value {
                "8" => Connectivity::Eight,
                "16" => Connectivity::Sixteen,
                _ => return input(format!("`connectivity` expects 8 or 16, got `{value}`")),
            }
        }
        "pruning" => cfg.planner.pruning = parse_bool(key, value)?,
        "epsilon" => cfg.planner.epsilon = num()?,
        "any_goal_heading" => cfg.planner.any_goal_heading = parse_bool(key, value)?,
        "w_s" => cfg.optimizer.w_s = num()?,
        "w_o" => cfg.optimizer.w_o = num()?,
        "d_s" => cfg.optimizer.d_s = num()?,
        "max_iterations" => cfg.optimizer.max_iterations = num()? as usize,
        "lambda" => cfg.optimizer.lambda_init = num()?,
        "v_max" => cfg.limits.v_max = num()?,
        "a_max" => cfg.limits.a_max = num()?,
        "a_lat_max" => {
            cfg.limits.a_lat_max = if value == "none" { None } else { Some(num()?) };
        }
        _ => return Ok(false),
    }
    Ok(true)
}

/// Reads `key: value` overrides, one per line, `#` comments.
pub fn parse_config_overrides(text: &str, cfg: &mut PipelineConfig) -> Result<(), HarnessError> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once(':') else {
            return input(format!("config line {}: expected `key: value`", i + 1));
        };
        if !apply_override(cfg, k.trim(), v.trim())? {
            return input(format!("config line {}: unknown key `{}`", i + 1, k.trim()));
        }
    }
    Ok(())
}

/// A parsed scenario file with its configuration.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub config: PipelineConfig,
    pub prims: String,
}

/// Scenario file, `key: value` per line:
///
/// ```text
/// map: fixture:u_turn        # or a sidecar path, relative to the scenario file
/// start: 1.2 1.4 0           # optional for fixtures
/// goal: 1.2 4.3 3.14159
/// edit: 2.5 100 20 110 60 occupied   # time ix0 iy0 ix1 iy1 state, repeatable
/// prims: builtin
/// optimize_local: off        # any configuration override
/// ```
pub fn parse_scenario(text: &str, base_dir: &Path, name: &str) -> Result<ScenarioSpec, HarnessError> {
    let mut map = None;
    let mut start = None;
    let mut goal = None;
    let mut edits = Vec::new();
    let mut prims = "builtin".to_string();
    let mut cfg = PipelineConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once(':') else {
            return input(format!("scenario line {line_no}: expected `key: value`"));
        };
        let (k, v) = (k.trim(), v.trim());
        match k {
            "map" => map = Some(v.to_string()),
            "start" => start = Some(parse_pose(v)?),
            "goal" => goal = Some(parse_pose(v)?),
            "prims" => prims = v.to_string(),
            "edit" => edits.push(parse_edit(v).map_err(|e| HarnessError::Input(format!("scenario line {line_no}: {e}")))?),
            _ => {
                if !apply_override(&mut cfg, k, v)? {
                    return input(format!("scenario line {line_no}: unknown key `{k}`"));
                }
            }
        }
    }
    let Some(map) = map else {
        return input("scenario has no `map` entry");
    };
    let map = if map.starts_with("fixture:") || Path::new(&map).is_absolute() {
        map
    } else {
        base_dir.join(&map).display().to_string()
    };
    let (world, fixture) = load_world(&map)?;
    let start = start.or(fixture.as_ref().map(|f| f.start));
    let goal = goal.or(fixture.as_ref().map(|f| f.goal));
    let (Some(start), Some(goal)) = (start, goal) else {
        return input("scenario needs `start` and `goal` unless the map is a fixture");
    };
    let g = *world.geometry();
    for e in &edits {
        if e.max.0 >= g.width() || e.max.1 >= g.height() || e.min.0 > e.max.0 || e.min.1 > e.max.1 {
            return input(format!("edit rectangle {:?}-{:?} is outside the {}x{} map", e.min, e.max, g.width(), g.height()));
        }
    }
    Ok(ScenarioSpec {
        scenario: Scenario {
            name: name.to_string(),
            world,
            start,
            goal,
            edits,
        },
        config: cfg,
        prims,
    })
}

fn parse_edit(v: &str) -> Result<MapEdit, String> {
    let f: Vec<&str> = v.split_whitespace().collect();
    if f.len() != 6 {
        return Err(format!("edit `{v}` needs: time ix0 iy0 ix1 iy1 occupied|free|unknown"));
    }
    let time: f64 = f[0].parse().map_err(|_| format!("bad edit time `{}`", f[0]))?;
    let idx = |s: &str| s.parse::<usize>().map_err(|_| format!("bad cell index `{s}`"));
    let value = match f[5] {
        "occupied" => Occupancy::Occupied,
        "free" => Occupancy::Free,
        "unknown" => Occupancy::Unknown,
        other => return Err(format!("bad occupancy `{other}`")),
    };
    if !(time >= 0.0) || !time.is_finite() {
        return Err(format!("edit time `{}` must be a non-negative number", f[0]));
    }
    Ok(MapEdit {
        time,
        min: (idx(f[1])?, idx(f[2])?),
        max: (idx(f[3])?, idx(f[4])?),
        value,
    })
}

pub fn load_scenario(path: &Path) -> Result<ScenarioSpec, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_scenario(&text, path.parent().unwrap_or(Path::new(".")), &name)
}

/// Result of [`cmd_plan`].
#[derive(Debug, Clone)]
pub struct PlanRun {
    pub record: BenchmarkRecord,
    pub path: Option<GlobalPath>,
}

/// One global plan at the primitive set's resolution.
pub fn cmd_plan(
    scenario_id: &str,
    world: &OccupancyGrid,
    start: Pose2,
    goal: Pose2,
    prims: &PrimitiveSet,
    cfg: &PipelineConfig,
) -> Result<PlanRun, HarnessError> {
    let variant = if cfg.planner.pruning { "pruned" } else { "baseline" };
    let cfg = PipelineConfig {
        global_resolution: prims.resolution(),
        ..cfg.clone()
    };
    let map = MapSnapshot::build(world.clone(), 0, &cfg)?;
    let g = *map.global_dg.geometry();
    let n = prims.num_angles();
    let s = pose_state(&g, start, n).ok_or_else(|| HarnessError::Input(format!("start {start:?} lies outside the map")))?;
    let t = pose_state(&g, goal, n).ok_or_else(|| HarnessError::Input(format!("goal {goal:?} lies outside the map")))?;
    let no_path = || PlanRun {
        record: BenchmarkRecord::empty(scenario_id, variant, Outcome::NoPath),
        path: None,
    };
    let Ok(field) = build_heuristic(
        &map.global_dg,
        (t.ix as usize, t.iy as usize),
        cfg.connectivity,
        cfg.footprint.inscribed_radius(),
        1.0 / cfg.limits.v_max,
    ) else {
        return Ok(no_path());
    };
    let planner = PlannerConfig {
        record_trace: false,
        ..cfg.planner
    };
    match plan(&map.global_dg, prims, &field, &cfg.footprint, s, t, &planner) {
        Ok(out) => Ok(PlanRun {
            record: BenchmarkRecord {
                expanded_states: out.stats.expanded_states as u64,
                graph_size: out.stats.graph_size as u64,
                planning_time: out.stats.planning_time,
                branching_factor: out.stats.branching_factor,
                path_cost: Some(out.path.total_cost),
                ..BenchmarkRecord::empty(scenario_id, variant, Outcome::Ok)
            },
            path: Some(out.path),
        }),
        Err(PlanError::NoPath { stats }) => Ok(PlanRun {
            record: BenchmarkRecord {
                expanded_states: stats.expanded_states as u64,
                graph_size: stats.graph_size as u64,
                planning_time: stats.planning_time,
                branching_factor: stats.branching_factor,
                ..BenchmarkRecord::empty(scenario_id, variant, Outcome::NoPath)
            },
            path: None,
        }),
        Err(PlanError::InvalidStart(_) | PlanError::InvalidGoal(_)) => Ok(no_path()),
        Err(e) => Err(HarnessError::Internal(e.to_string())),
    }
}

/// Result of [`cmd_optimize`].
#[derive(Debug, Clone)]
pub struct OptimizeRun {
    pub record: BenchmarkRecord,
    pub chain: Vec<WorldPoint>,
    pub report: OptimizeReport,
    /// Interior vertices that started inside an obstacle (clearance zero).
    pub infeasible_vertices: Vec<usize>,
}

pub fn cmd_optimize(
    scenario_id: &str,
    world: &OccupancyGrid,
    chain: &[WorldPoint],
    cfg: &PipelineConfig,
) -> Result<OptimizeRun, HarnessError> {
    if chain.len() < 3 {
        return input(format!("chain has {} vertices; at least 3 are needed", chain.len()));
    }
    let dg = distance_transform(world, cfg.unknown_is_obstacle).map_err(|e| HarnessError::Input(e.to_string()))?;
    let infeasible_vertices = (1..chain.len() - 1)
        .filter(|&i| dg.cell_distance_at(chain[i]).is_none_or(|d| d <= 0.0))
        .collect();
    let (out, report) = optimize(chain, &dg, &cfg.optimizer).map_err(|e| HarnessError::Input(e.to_string()))?;
    let outcome = match report.status {
        OptimizeStatus::NonConverged => Outcome::NonConverged,
        _ => Outcome::Ok,
    };
    Ok(OptimizeRun {
        record: BenchmarkRecord {
            min_clearance: Some(min_interior_clearance(&out, &dg)),
            ..BenchmarkRecord::empty(scenario_id, "lm", outcome)
        },
        chain: out,
        report,
        infeasible_vertices,
    })
}

/// Result of [`cmd_run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: BenchmarkRecord,
    pub result: RunResult,
}

/// How [`cmd_run`] executes the tasks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunMode {
    /// Simulated clock, bit-reproducible.
    Deterministic,
    /// One thread per task, at most `speedup` simulated seconds per wall second.
    Threaded { speedup: f64 },
}

pub fn cmd_run(spec: &ScenarioSpec, mode: RunMode) -> Result<RunOutput, HarnessError> {
    let probe = PipelineConfig::default().global_resolution;
    let prims = Arc::new(load_primitives(&spec.prims, probe)?);
    let cfg = PipelineConfig {
        global_resolution: prims.resolution(),
        ..spec.config.clone()
    };
    let variant = if cfg.optimize_local { "optimized" } else { "raw" };
    let result = match mode {
        RunMode::Deterministic => simulate(&spec.scenario, prims, &cfg)?,
        RunMode::Threaded { speedup } => simulate_threaded(&spec.scenario, prims, &cfg, speedup)?,
    };
    let stats = result.first_plan.unwrap_or_default();
    Ok(RunOutput {
        record: BenchmarkRecord {
            scenario_id: spec.scenario.name.clone(),
            variant: variant.to_string(),
            expanded_states: stats.expanded_states as u64,
            graph_size: stats.graph_size as u64,
            planning_time: stats.planning_time,
            branching_factor: stats.branching_factor,
            path_cost: result.first_path_cost,
            travel_time: Some(result.travel_time),
            min_clearance: Some(result.min_clearance),
            outcome: result.outcome,
        },
        result,
    })
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq)]
pub enum SuiteCell {
    /// Planner comparison on a map with optional explicit start and goal.
    Plan {
        id: String,
        map: String,
        endpoints: Option<(Pose2, Pose2)>,
        pruning: bool,
    },
    /// End-to-end run of a scenario file.
    Run { id: String, scenario: PathBuf, optimize: bool },
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub cells: Vec<SuiteCell>,
    pub prims: String,
}

/// Manifest, one entry per line (`#` comments):
///
/// ```text
/// prims: builtin
/// plan corridor fixture:corridor
/// plan office maps/office.yaml 1 1 0 8 4 1.57
/// run uturn scenarios/u_turn.txt
/// ```
///
/// Every `plan` line expands to a pruned and a baseline cell, every `run` line to an
/// optimized and a raw cell.
pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<Manifest, HarnessError> {
    let mut cells = Vec::new();
    let mut prims = "builtin".to_string();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(v) = line.strip_prefix("prims:") {
            prims = v.trim().to_string();
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let resolve = |p: &str| {
            if p.starts_with("fixture:") || Path::new(p).is_absolute() {
                p.to_string()
            } else {
                base_dir.join(p).display().to_string()
            }
        };
        match (f[0], f.len()) {
            ("plan", 3) | ("plan", 9) => {
                let endpoints = if f.len() == 9 {
                    Some((parse_pose(&f[3..6].join(" "))?, parse_pose(&f[6..9].join(" "))?))
                } else {
                    None
                };
                for pruning in [true, false] {
                    cells.push(SuiteCell::Plan {
                        id: f[1].to_string(),
                        map: resolve(f[2]),
                        endpoints,
                        pruning,
                    });
                }
            }
            ("run", 3) => {
                for optimize in [true, false] {
                    cells.push(SuiteCell::Run {
                        id: f[1].to_string(),
                        scenario: PathBuf::from(resolve(f[2])),
                        optimize,
                    });
                }
            }
            _ => return input(format!("manifest line {line_no}: expected `plan <id> <map> [start goal]` or `run <id> <scenario>`")),
        }
    }
    if cells.is_empty() {
        return input("manifest lists no scenarios");
    }
    Ok(Manifest { cells, prims })
}

/// Per-pair comparison of the aggregate table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub scenario_id: String,
    pub expanded_pruned: u64,
    pub expanded_baseline: u64,
    /// `100 * (1 - pruned / baseline)`.
    pub reduction_pct: f64,
    pub cost_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteAggregate {
    pub pairs: Vec<PairSummary>,
    /// Mean of the per-pair reductions; `None` without a complete pair.
    pub mean_reduction_pct: Option<f64>,
}

impl SuiteAggregate {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario_id,expanded_pruned,expanded_baseline,reduction_pct,cost_ratio\n");
        for p in &self.pairs {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                p.scenario_id, p.expanded_pruned, p.expanded_baseline, p.reduction_pct, p.cost_ratio
            );
        }
        if let Some(m) = self.mean_reduction_pct {
            let _ = writeln!(out, "mean,,,{m},");
        }
        out
    }
}

/// Pairs pruned and baseline records by scenario id (first occurrence of each), keeping
/// pairs where both succeeded.
pub fn aggregate(records: &[BenchmarkRecord]) -> SuiteAggregate {
    let mut pairs = Vec::new();
    let mut seen: Vec<&str> = Vec::new();
    for r in records.iter().filter(|r| r.variant == "pruned") {
        if seen.contains(&r.scenario_id.as_str()) {
            continue;
        }
        seen.push(&r.scenario_id);
        let Some(b) = records
            .iter()
            .find(|b| b.variant == "baseline" && b.scenario_id == r.scenario_id)
        else {
            continue;
        };
        if r.outcome != Outcome::Ok || b.outcome != Outcome::Ok || b.expanded_states == 0 {
            continue;
        }
        pairs.push(PairSummary {
            scenario_id: r.scenario_id.clone(),
            expanded_pruned: r.expanded_states,
            expanded_baseline: b.expanded_states,
            reduction_pct: 100.0 * (1.0 - r.expanded_states as f64 / b.expanded_states as f64),
            cost_ratio: r.path_cost.unwrap_or(f64::NAN) / b.path_cost.unwrap_or(f64::NAN),
        });
    }
    let mean_reduction_pct = (!pairs.is_empty())
        .then(|| pairs.iter().map(|p| p.reduction_pct).sum::<f64>() / pairs.len() as f64);
    SuiteAggregate {
        pairs,
        mean_reduction_pct,
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOutput {
    pub records: Vec<BenchmarkRecord>,
    pub aggregate: SuiteAggregate,
    /// Cells that could not run at all, by index, with the reason.
    pub errors: Vec<(usize, String)>,
}

fn run_cell(cell: &SuiteCell, prims_spec: &str) -> Result<BenchmarkRecord, HarnessError> {
    match cell {
        SuiteCell::Plan {
            id,
            map,
            endpoints,
            pruning,
        } => {
            let (world, fixture) = load_world(map)?;
            let (start, goal) = match (endpoints, &fixture) {
                (Some(e), _) => *e,
                (None, Some(f)) => (f.start, f.goal),
                (None, None) => return input(format!("`{id}`: start and goal are required for map files")),
            };
            let prims = load_primitives(prims_spec, PipelineConfig::default().global_resolution)?;
            let mut cfg = PipelineConfig::default();
            cfg.planner.pruning = *pruning;
            Ok(cmd_plan(id, &world, start, goal, &prims, &cfg)?.record)
        }
        SuiteCell::Run { id, scenario, optimize } => {
            let mut spec = load_scenario(scenario)?;
            spec.scenario.name = id.clone();
            spec.config.optimize_local = *optimize;
            Ok(cmd_run(&spec, RunMode::Deterministic)?.record)
        }
    }
}

/// Runs every cell on up to `threads` worker threads. Cell failures are recorded and the
/// suite continues; records keep manifest order.
pub fn cmd_suite(manifest: &Manifest, threads: usize) -> SuiteOutput {
    let n = manifest.cells.len();
    let results: Mutex<Vec<Option<Result<BenchmarkRecord, String>>>> = Mutex::new(vec![None; n]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, n) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = run_cell(&manifest.cells[i], &manifest.prims).map_err(|e| e.to_string());
                results.lock().expect("suite results lock")[i] = Some(r);
            });
        }
    });
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (i, r) in results.into_inner().expect("suite results lock").into_iter().enumerate() {
        match r.expect("every cell ran") {
            Ok(rec) => records.push(rec),
            Err(e) => errors.push((i, e)),
        }
    }
    let aggregate = aggregate(&records);
    SuiteOutput {
        records,
        aggregate,
        errors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, variant: &str, expanded: u64, cost: f64) -> BenchmarkRecord {
        BenchmarkRecord {
            expanded_states: expanded,
            graph_size: expanded * 2,
            planning_time: 0.125,
            branching_factor: 4.5,
            path_cost: Some(cost),
            ..BenchmarkRecord::empty(id, variant, Outcome::Ok)
        }
    }

    #[test]
    fn records_round_trip() {
        let mut a = record("corridor", "pruned", 10, 1.0 / 3.0);
        a.travel_time = Some(12.345678901234567);
        a.min_clearance = Some(0.1 + 0.2);
        let b = BenchmarkRecord::empty("odd, \"name\"", "baseline", Outcome::NoPath);
        let recs = vec![a, b];
        let csv = records_to_csv(&recs).unwrap();
        assert!(csv.starts_with(RECORD_HEADER));
        assert_eq!(records_from_csv(&csv).unwrap(), recs);
        assert_eq!(records_from_json(&records_to_json(&recs).unwrap()).unwrap(), recs);
        assert!(records_from_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn aggregate_is_mean_of_pairs() {
        let recs = vec![
            record("a", "pruned", 50, 10.0),
            record("a", "baseline", 100, 10.0),
            record("b", "pruned", 75, 10.5),
            record("b", "baseline", 100, 10.0),
            record("c", "pruned", 90, 1.0),
            record("c", "baseline", 100, 1.0),
        ];
        let agg = aggregate(&recs);
        assert_eq!(agg.pairs.len(), 3);
        assert!((agg.mean_reduction_pct.unwrap() - (50.0 + 25.0 + 10.0) / 3.0).abs() < 1e-12);
        assert!((agg.pairs[1].cost_ratio - 1.05).abs() < 1e-12);
        assert!(agg.to_csv().lines().last().unwrap().starts_with("mean,"));
        let mut failed = recs.clone();
        failed[3].outcome = Outcome::NoPath;
        assert_eq!(aggregate(&failed).pairs.len(), 2);
    }

    #[test]
    fn manifest_parsing() {
        let m = parse_manifest(
            "# suite\nprims: builtin\nplan c fixture:corridor\nplan m map.yaml 1 1 0 2 2 0\nrun u u.txt\n",
            Path::new("/tmp/base"),
        )
        .unwrap();
        assert_eq!(m.cells.len(), 6);
        assert!(matches!(&m.cells[2], SuiteCell::Plan { map, endpoints: Some(_), .. } if map == "/tmp/base/map.yaml"));
        assert!(parse_manifest("# nothing\n", Path::new(".")).is_err());
        assert!(parse_manifest("plan only_id\n", Path::new(".")).is_err());
    }

    #[test]
    fn scenario_parsing() {
        let s = parse_scenario(
            "map: fixture:u_turn\nedit: 1.5 10 10 12 12 occupied\noptimize_local: off\nv_max: 0.5\n",
            Path::new("."),
            "u",
        )
        .unwrap();
        assert_eq!(s.scenario.start, fixtures::u_turn().start);
        assert_eq!(s.scenario.edits.len(), 1);
        assert!(!s.config.optimize_local);
        assert_eq!(s.config.limits.v_max, 0.5);
        for bad in [
            "start: 1 1 0\ngoal: 2 2 0\n",
            "map: fixture:u_turn\nbogus: 1\n",
            "map: fixture:u_turn\nedit: 1 0 0 9999 1 occupied\n",
            "map: fixture:u_turn\nedit: 1 0 0 1 1 solid\n",
            "map: fixture:nope\n",
        ] {
            assert!(matches!(parse_scenario(bad, Path::new("."), "x"), Err(HarnessError::Input(_))), "{bad}");
        }
    }

    #[test]
    fn chain_and_pose_parsing() {
        let c = parse_chain("# chain\n0 0\n0.5 0.25  # mid\n1 0\n").unwrap();
        assert_eq!(c, vec![WorldPoint::new(0.0, 0.0), WorldPoint::new(0.5, 0.25), WorldPoint::new(1.0, 0.0)]);
        assert_eq!(parse_chain(&format_chain(&c)).unwrap(), c);
        assert!(parse_chain("1 2 3\n").is_err());
        assert!(parse_chain("1 x\n").is_err());
        assert_eq!(parse_pose("1,2, 0.5").unwrap(), Pose2::new(1.0, 2.0, 0.5));
        assert!(parse_pose("1 2").is_err());
        assert!(parse_pose("1 2 nan").is_err());
    }

    #[test]
    fn plan_on_corridor_fixture() {
        let f = fixtures::corridor();
        let prims = PrimitiveSet::builtin(0.1);
        let mut cfg = PipelineConfig::default();
        let on = cmd_plan("corridor", &f.world, f.start, f.goal, &prims, &cfg).unwrap();
        cfg.planner.pruning = false;
        let off = cmd_plan("corridor", &f.world, f.start, f.goal, &prims, &cfg).unwrap();
        let (a, b) = (on.record, off.record);
        assert_eq!((a.variant.as_str(), b.variant.as_str()), ("pruned", "baseline"));
        assert!(a.path_cost.unwrap() / b.path_cost.unwrap() <= 1.05);
        assert!(a.expanded_states < b.expanded_states);
        let again = cmd_plan("corridor", &f.world, f.start, f.goal, &prims, &PipelineConfig::default()).unwrap();
        let strip = |mut r: BenchmarkRecord| {
            r.planning_time = 0.0;
            records_to_csv(&[r]).unwrap()
        };
        assert_eq!(strip(a), strip(again.record));
    }

    #[test]
    fn optimize_flags_infeasible_start() {
        let mut world = fixtures::u_turn().world;
        world.fill_rect(WorldPoint::new(5.0, 1.0), WorldPoint::new(5.3, 1.3), Occupancy::Occupied);
        let chain: Vec<WorldPoint> = (0..21).map(|i| WorldPoint::new(4.0 + 0.1 * i as f64, 1.125)).collect();
        let r = cmd_optimize("u", &world, &chain, &PipelineConfig::default()).unwrap();
        assert!(!r.infeasible_vertices.is_empty());
        assert_eq!(r.chain.len(), chain.len());
        assert!(cmd_optimize("u", &world, &chain[..2], &PipelineConfig::default()).is_err());
    }
}
