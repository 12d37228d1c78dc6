//! A* over the `(x, y, theta)` state lattice with heuristic-guided primitive pruning.
//!
//! When pruning is enabled, a non-basic primitive is skipped if its displacement
//! direction `beta` deviates from the heuristic's predicted direction `alpha` at the
//! expanded cell by more than `epsilon`. Forward steps and in-place turns are always
//! expanded, which keeps the search resolution-complete.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::FRAC_PI_4;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{wrap_angle, Pose2, WorldPoint};
use crate::gridmap::{DistanceGrid, Footprint, GridGeometry};
use crate::heuristic::HeuristicField;
use crate::primitives::{angle_bin, bin_angle, LatticeState, MotionPrimitive, PrimitiveSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct SearchStats {
    pub expanded_states: usize,
    pub graph_size: usize,
    /// Seconds.
    pub planning_time: f64,
    pub branching_factor: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("start state {0:?} is outside the map or in collision")]
    InvalidStart(LatticeState),
    #[error("goal state {0:?} is outside the map or in collision")]
    InvalidGoal(LatticeState),
    #[error("configuration mismatch: {0}")]
    Mismatch(String),
    #[error("no path after {} expansions", .stats.expanded_states)]
    NoPath { stats: SearchStats },
    #[error("broken parent chain at node {0}")]
    BrokenParentChain(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub pruning: bool,
    /// Pruning threshold, radians.
    pub epsilon: f64,
    /// Accept any heading at the goal cell.
    pub any_goal_heading: bool,
    /// Keep the sequence of expanded states.
    pub record_trace: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            pruning: true,
            epsilon: FRAC_PI_4,
            any_goal_heading: false,
            record_trace: false,
        }
    }
}

/// Continuous path obtained by chaining primitive pose sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalPath {
    pub poses: Vec<Pose2>,
    /// Seconds.
    pub total_cost: f64,
    pub states: Vec<LatticeState>,
    pub primitive_ids: Vec<usize>,
}

impl GlobalPath {
    pub fn points(&self) -> Vec<WorldPoint> {
        self.poses.iter().map(Pose2::position).collect()
    }

    pub fn length(&self) -> f64 {
        self.poses
            .windows(2)
            .map(|w| w[0].position().distance(w[1].position()))
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct PlanOutput {
    pub path: GlobalPath,
    pub stats: SearchStats,
    pub trace: Vec<LatticeState>,
}

/// Pose of a lattice state: cell center plus bin heading.
pub fn state_pose(geometry: &GridGeometry, s: LatticeState, num_angles: usize) -> Pose2 {
    let c = geometry.cell_center(i64::from(s.ix), i64::from(s.iy));
    Pose2::new(c.x, c.y, bin_angle(s.itheta, num_angles))
}

/// Lattice state containing a pose; `None` off the grid.
pub fn pose_state(geometry: &GridGeometry, pose: Pose2, num_angles: usize) -> Option<LatticeState> {
    let (ix, iy) = geometry.world_to_cell(pose.position())?;
    Some(LatticeState::new(
        ix as i32,
        iy as i32,
        angle_bin(pose.theta, num_angles),
    ))
}

/// Whether `prim` applied at `from` keeps every intermediate pose collision-free.
pub fn primitive_is_free(
    dg: &DistanceGrid,
    footprint: &Footprint,
    from: LatticeState,
    prim: &MotionPrimitive,
) -> bool {
    let c = dg
        .geometry()
        .cell_center(i64::from(from.ix), i64::from(from.iy));
    prim.poses
        .iter()
        .all(|p| footprint.is_pose_free(dg, Pose2::new(c.x + p.x, c.y + p.y, p.theta)))
}

/// Slack on the pruning comparison. Arc chords often sit exactly on the threshold
/// (a quarter turn of radius 2 ends at 45 degrees), and rounding in `atan2` would
/// otherwise settle those ties differently per heading.
pub const PRUNE_ANGLE_TOLERANCE: f64 = 1e-9;

/// Whether pruning removes `prim` at a cell whose predicted direction is `alpha`.
/// Only deviations strictly beyond `epsilon` prune.
pub fn is_pruned(prim: &MotionPrimitive, alpha: Option<f64>, epsilon: f64) -> bool {
    if prim.kind.is_basic() || !prim.has_translation() {
        return false;
    }
    let Some(alpha) = alpha else {
        return false;
    };
    let beta = f64::from(prim.end_offset.1).atan2(f64::from(prim.end_offset.0));
    wrap_angle(alpha - beta).abs() > epsilon + PRUNE_ANGLE_TOLERANCE
}

#[derive(Debug, Clone)]
struct Node {
    state: LatticeState,
    g: f64,
    h: f64,
    parent: Option<(usize, usize)>,
    closed: bool,
}

#[derive(PartialEq)]
struct OpenEntry {
    f: f64,
    g: f64,
    node: usize,
}

impl Eq for OpenEntry {}

impl Ord for OpenEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap: smallest f first, then largest g, then oldest node.
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Plans from `start` to `goal`. The heuristic field must have been built for the
/// goal's cell over the same grid geometry as `dg`.
pub fn plan(
    dg: &DistanceGrid,
    prims: &PrimitiveSet,
    field: &HeuristicField,
    footprint: &Footprint,
    start: LatticeState,
    goal: LatticeState,
    cfg: &PlannerConfig,
) -> Result<PlanOutput, PlanError> {
    let t0 = Instant::now();
    let g = dg.geometry();
    let n = prims.num_angles();
    if field.geometry() != g {
        return Err(PlanError::Mismatch(
            "heuristic field and distance grid differ in geometry".into(),
        ));
    }
    if (prims.resolution() - g.resolution()).abs() > 1e-9 {
        return Err(PlanError::Mismatch(format!(
            "primitive resolution {} does not match grid resolution {}",
            prims.resolution(),
            g.resolution()
        )));
    }
    let valid = |s: LatticeState| {
        s.itheta < n
            && g.contains(i64::from(s.ix), i64::from(s.iy))
            && footprint.is_pose_free(dg, state_pose(g, s, n))
    };
    if !valid(start) {
        return Err(PlanError::InvalidStart(start));
    }
    if !valid(goal) {
        return Err(PlanError::InvalidGoal(goal));
    }
    if field.goal() != (goal.ix as usize, goal.iy as usize) {
        return Err(PlanError::Mismatch(format!(
            "heuristic field targets cell {:?}, goal is ({}, {})",
            field.goal(),
            goal.ix,
            goal.iy
        )));
    }
    let is_goal = |s: LatticeState| {
        s.ix == goal.ix && s.iy == goal.iy && (cfg.any_goal_heading || s.itheta == goal.itheta)
    };

    let mut nodes: Vec<Node> = Vec::new();
    let mut index: HashMap<LatticeState, usize> = HashMap::new();
    let mut open = BinaryHeap::new();
    let mut trace = Vec::new();
    let mut expanded = 0usize;
    let mut successors = 0usize;

    let h0 = field.h(start);
    nodes.push(Node {
        state: start,
        g: 0.0,
        h: h0,
        parent: None,
        closed: false,
    });
    index.insert(start, 0);
    open.push(OpenEntry {
        f: h0,
        g: 0.0,
        node: 0,
    });

    let stats = |expanded: usize, successors: usize, nodes: usize| SearchStats {
        expanded_states: expanded,
        graph_size: nodes,
        planning_time: t0.elapsed().as_secs_f64(),
        branching_factor: if expanded == 0 {
            0.0
        } else {
            successors as f64 / expanded as f64
        },
    };

    while let Some(OpenEntry { g: g_entry, node, .. }) = open.pop() {
        if nodes[node].closed || g_entry != nodes[node].g {
            continue;
        }
        nodes[node].closed = true;
        let s = nodes[node].state;
        let gs = nodes[node].g;
        expanded += 1;
        if cfg.record_trace {
            trace.push(s);
        }
        if is_goal(s) {
            let path = reconstruct_path(&nodes_view(&nodes), node, prims, g)?;
            return Ok(PlanOutput {
                path,
                stats: stats(expanded, successors, nodes.len()),
                trace,
            });
        }
        let alpha = if cfg.pruning {
            field.alpha(s.ix, s.iy)
        } else {
            None
        };
        for prim in prims.for_angle(s.itheta) {
            if cfg.pruning && is_pruned(prim, alpha, cfg.epsilon) {
                continue;
            }
            let t = prim.apply(s);
            let ht = field.h(t);
            if !ht.is_finite() || !primitive_is_free(dg, footprint, s, prim) {
                continue;
            }
            successors += 1;
            let gt = gs + prim.cost;
            match index.get(&t) {
                Some(&id) => {
                    if gt < nodes[id].g {
                        let nd = &mut nodes[id];
                        nd.g = gt;
                        nd.parent = Some((node, prim.id));
                        nd.closed = false;
                        open.push(OpenEntry {
                            f: gt + nd.h,
                            g: gt,
                            node: id,
                        });
                    }
                }
                None => {
                    let id = nodes.len();
                    nodes.push(Node {
                        state: t,
                        g: gt,
                        h: ht,
                        parent: Some((node, prim.id)),
                        closed: false,
                    });
                    index.insert(t, id);
                    open.push(OpenEntry {
                        f: gt + ht,
                        g: gt,
                        node: id,
                    });
                }
            }
        }
    }
    Err(PlanError::NoPath {
        stats: stats(expanded, successors, nodes.len()),
    })
}

/// Parent links of a search graph: `(state, Option<(parent node, primitive id)>)`.
pub type ParentLinks = Vec<(LatticeState, Option<(usize, usize)>)>;

fn nodes_view(nodes: &[Node]) -> ParentLinks {
    nodes.iter().map(|n| (n.state, n.parent)).collect()
}

/// Walks parent links back from `goal_node` and concatenates primitive poses, dropping
/// the duplicated pose at each junction.
pub fn reconstruct_path(
    nodes: &ParentLinks,
    goal_node: usize,
    prims: &PrimitiveSet,
    geometry: &GridGeometry,
) -> Result<GlobalPath, PlanError> {
    let mut chain = Vec::new();
    let mut cur = goal_node;
    loop {
        let (state, parent) = *nodes.get(cur).ok_or(PlanError::BrokenParentChain(cur))?;
        match parent {
            None => {
                chain.push((state, None));
                break;
            }
            Some((p, prim)) => {
                chain.push((state, Some(prim)));
                if chain.len() > nodes.len() {
                    return Err(PlanError::BrokenParentChain(cur));
                }
                cur = p;
            }
        }
    }
    chain.reverse();
    let start = chain[0].0;
    let mut poses = vec![state_pose(geometry, start, prims.num_angles())];
    let mut states = vec![start];
    let mut ids = Vec::new();
    let mut cost = 0.0;
    for w in chain.windows(2) {
        let (from, _) = w[0];
        let (to, prim_id) = w[1];
        let prim_id = prim_id.ok_or(PlanError::BrokenParentChain(goal_node))?;
        let prim = prims
            .get(prim_id)
            .filter(|p| p.start_itheta == from.itheta && p.apply(from) == to)
            .ok_or(PlanError::BrokenParentChain(goal_node))?;
        let c = geometry.cell_center(i64::from(from.ix), i64::from(from.iy));
        poses.extend(
            prim.poses
                .iter()
                .skip(1)
                .map(|p| Pose2::new(c.x + p.x, c.y + p.y, p.theta)),
        );
        states.push(to);
        ids.push(prim_id);
        cost += prim.cost;
    }
    Ok(GlobalPath {
        poses,
        total_cost: cost,
        states,
        primitive_ids: ids,
    })
}

/// One `ix iy itheta` line per expanded state.
pub fn format_trace(trace: &[LatticeState]) -> String {
    let mut out = String::with_capacity(trace.len() * 12);
    for s in trace {
        let _ = writeln!(out, "{} {} {}", s.ix, s.iy, s.itheta);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::{distance_transform, Occupancy, OccupancyGrid};
    use crate::heuristic::{build_heuristic, Connectivity};
    use crate::primitives::PrimitiveKind;
    use std::f64::consts::PI;

    fn setup(w: usize, h: usize, obstacles: &[(WorldPoint, WorldPoint)]) -> DistanceGrid {
        let geom = GridGeometry::new(w, h, 0.1, WorldPoint::default()).unwrap();
        let mut grid = OccupancyGrid::new(geom, Occupancy::Free);
        for &(a, b) in obstacles {
            grid.fill_rect(a, b, Occupancy::Occupied);
        }
        distance_transform(&grid, true).unwrap()
    }

    fn field_for(dg: &DistanceGrid, goal: LatticeState, fp: &Footprint) -> HeuristicField {
        build_heuristic(
            dg,
            (goal.ix as usize, goal.iy as usize),
            Connectivity::Sixteen,
            fp.inscribed_radius(),
            1.0 / 0.7,
        )
        .unwrap()
    }

    #[test]
    fn pruning_rule() {
        let prims = PrimitiveSet::builtin(0.1);
        let general = prims
            .for_angle(0)
            .iter()
            .find(|p| p.kind == PrimitiveKind::General && p.end_offset.1 > 0)
            .unwrap();
        let beta = f64::from(general.end_offset.1).atan2(f64::from(general.end_offset.0));
        assert!(!is_pruned(general, Some(beta), FRAC_PI_4));
        assert!(is_pruned(general, Some(beta - PI / 2.0), FRAC_PI_4));
        assert!(!is_pruned(general, None, FRAC_PI_4));
        // Wrapping makes headings near +-pi behave.
        let back = prims
            .for_angle(8)
            .iter()
            .find(|p| p.kind == PrimitiveKind::General && p.end_offset.1 == 0)
            .unwrap();
        assert!(!is_pruned(back, Some(-PI + 0.1), FRAC_PI_4));
        // Threshold ties are kept on every heading alike.
        for it in (0..16).step_by(2) {
            let theta = bin_angle(it, 16);
            for p in prims.for_angle(it).iter().filter(|p| p.has_translation()) {
                assert!(!is_pruned(p, Some(theta), FRAC_PI_4), "heading {it} prim {}", p.id);
            }
        }
        for p in prims.for_angle(3).iter().filter(|p| p.kind.is_basic()) {
            assert!(!is_pruned(p, Some(2.0), FRAC_PI_4));
        }
    }

    #[test]
    fn open_map_pruning_keeps_cost() {
        // 20 m x 20 m, (2, 2, 0) to (18, 2, 0). The heuristic is exact along the line, so
        // both variants expand the same states.
        let dg = setup(200, 200, &[]);
        let fp = Footprint::default();
        let prims = PrimitiveSet::builtin(0.1);
        let (start, goal) = (LatticeState::new(20, 20, 0), LatticeState::new(180, 20, 0));
        let field = field_for(&dg, goal, &fp);
        let on = plan(&dg, &prims, &field, &fp, start, goal, &PlannerConfig::default()).unwrap();
        let off_cfg = PlannerConfig {
            pruning: false,
            ..Default::default()
        };
        let off = plan(&dg, &prims, &field, &fp, start, goal, &off_cfg).unwrap();
        assert!((on.path.total_cost - off.path.total_cost).abs() < 1e-9);
        assert!((on.path.total_cost - 16.0 / 0.7).abs() < 1e-9);
        assert!(on.stats.expanded_states <= off.stats.expanded_states);
        assert!(on.stats.graph_size <= off.stats.graph_size);
        assert!(on.stats.graph_size >= on.stats.expanded_states);
    }

    #[test]
    fn pruning_cuts_graph_around_obstacles() {
        let dg = setup(
            60,
            60,
            &[
                (WorldPoint::new(2.0, 0.0), WorldPoint::new(2.3, 4.0)),
                (WorldPoint::new(3.5, 2.0), WorldPoint::new(3.8, 6.0)),
            ],
        );
        let fp = Footprint::default();
        let prims = PrimitiveSet::builtin(0.1);
        let (start, goal) = (LatticeState::new(8, 8, 0), LatticeState::new(52, 8, 0));
        let field = field_for(&dg, goal, &fp);
        let on = plan(&dg, &prims, &field, &fp, start, goal, &PlannerConfig::default()).unwrap();
        let off_cfg = PlannerConfig {
            pruning: false,
            ..Default::default()
        };
        let off = plan(&dg, &prims, &field, &fp, start, goal, &off_cfg).unwrap();
        assert!(on.path.total_cost <= off.path.total_cost * 1.05);
        assert!(on.stats.expanded_states < off.stats.expanded_states);
        assert!(on.stats.graph_size < off.stats.graph_size);
        assert!(on.stats.branching_factor < off.stats.branching_factor);
    }

    #[test]
    fn dead_end_pocket_needs_in_place_turn() {
        // The robot starts facing into a pocket barely wider than itself; only turning
        // on the spot gets it out.
        let dg = setup(
            50,
            40,
            &[
                (WorldPoint::new(2.0, 1.5), WorldPoint::new(4.0, 1.7)),
                (WorldPoint::new(2.0, 2.5), WorldPoint::new(4.0, 2.7)),
                (WorldPoint::new(3.8, 1.5), WorldPoint::new(4.0, 2.7)),
            ],
        );
        let fp = Footprint::default();
        let prims = PrimitiveSet::builtin(0.1);
        let (start, goal) = (LatticeState::new(33, 21, 0), LatticeState::new(10, 21, 8));
        let field = field_for(&dg, goal, &fp);
        let off_cfg = PlannerConfig {
            pruning: false,
            ..Default::default()
        };
        let off = plan(&dg, &prims, &field, &fp, start, goal, &off_cfg).unwrap();
        let on = plan(&dg, &prims, &field, &fp, start, goal, &PlannerConfig::default()).unwrap();
        for out in [&off, &on] {
            assert!(out
                .path
                .primitive_ids
                .iter()
                .any(|&id| !prims.get(id).unwrap().has_translation()));
        }
    }

    #[test]
    fn path_contract() {
        let dg = setup(40, 40, &[(WorldPoint::new(1.5, 0.0), WorldPoint::new(2.0, 2.8))]);
        let fp = Footprint::default();
        let prims = PrimitiveSet::builtin(0.1);
        let (start, goal) = (LatticeState::new(5, 5, 4), LatticeState::new(32, 8, 12));
        let field = field_for(&dg, goal, &fp);
        let out = plan(&dg, &prims, &field, &fp, start, goal, &PlannerConfig::default()).unwrap();
        let p = &out.path;
        assert_eq!(p.poses[0], state_pose(dg.geometry(), start, 16));
        let last = p.poses.last().unwrap();
        let gp = state_pose(dg.geometry(), goal, 16);
        assert!(last.position().distance(gp.position()) < 1e-9);
        assert!(wrap_angle(last.theta - gp.theta).abs() < 1e-9);
        for w in p.poses.windows(2) {
            assert!(w[0].position().distance(w[1].position()) <= 0.05 + 1e-9);
        }
        for pose in &p.poses {
            assert!(fp.is_pose_free(&dg, *pose));
        }
        let sum: f64 = p.primitive_ids.iter().map(|&id| prims.get(id).unwrap().cost).sum();
        assert!((sum - p.total_cost).abs() < 1e-12);
        // The wall forces a detour around its top end.
        assert!(p.poses.iter().any(|q| q.y > 2.8));
    }

    #[test]
    fn endpoint_errors_and_no_path() {
        let dg = setup(40, 20, &[(WorldPoint::new(1.9, 0.0), WorldPoint::new(2.1, 2.0))]);
        let fp = Footprint::default();
        let prims = PrimitiveSet::builtin(0.1);
        let goal = LatticeState::new(35, 10, 0);
        let field = field_for(&dg, goal, &fp);
        let cfg = PlannerConfig::default();
        assert!(matches!(
            plan(&dg, &prims, &field, &fp, LatticeState::new(20, 10, 0), goal, &cfg),
            Err(PlanError::InvalidStart(_))
        ));
        let bad_goal = LatticeState::new(20, 5, 0);
        assert!(matches!(
            plan(&dg, &prims, &field, &fp, LatticeState::new(5, 10, 0), bad_goal, &cfg),
            Err(PlanError::InvalidGoal(_))
        ));
        // The wall spans the full map height, so the goal side is unreachable.
        let r = plan(&dg, &prims, &field, &fp, LatticeState::new(5, 10, 0), goal, &cfg);
        assert!(matches!(r, Err(PlanError::NoPath { .. })), "{r:?}");
    }

    /// Exhaustive uniform-cost search over the same lattice and collision test.
    fn ucs_cost(
        dg: &DistanceGrid,
        prims: &PrimitiveSet,
        fp: &Footprint,
        start: LatticeState,
        goal: LatticeState,
    ) -> Option<f64> {
        let mut best: HashMap<LatticeState, f64> = HashMap::new();
        let mut heap = BinaryHeap::new();
        best.insert(start, 0.0);
        heap.push(OpenEntry {
            f: 0.0,
            g: 0.0,
            node: 0,
        });
        let mut states = vec![start];
        while let Some(e) = heap.pop() {
            let s = states[e.node];
            if e.g > best[&s] {
                continue;
            }
            if s == goal {
                return Some(e.g);
            }
            for p in prims.for_angle(s.itheta) {
                let t = p.apply(s);
                if !dg.geometry().contains(i64::from(t.ix), i64::from(t.iy))
                    || !primitive_is_free(dg, fp, s, p)
                {
                    continue;
                }
                let g = e.g + p.cost;
                if best.get(&t).is_none_or(|&b| g < b) {
                    best.insert(t, g);
                    states.push(t);
                    heap.push(OpenEntry {
                        f: g,
                        g,
                        node: states.len() - 1,
                    });
                }
            }
        }
        None
    }

    #[test]
    fn unpruned_cost_matches_uniform_cost_search() {
        let dg = setup(30, 30, &[(WorldPoint::new(1.2, 0.8), WorldPoint::new(1.6, 2.2))]);
        let fp = Footprint::rectangle(0.3, 0.2).unwrap();
        let prims = PrimitiveSet::builtin(0.1);
        let off = PlannerConfig {
            pruning: false,
            ..Default::default()
        };
        for (start, goal) in [
            (LatticeState::new(4, 4, 0), LatticeState::new(25, 25, 0)),
            (LatticeState::new(4, 15, 0), LatticeState::new(25, 15, 8)),
            (LatticeState::new(4, 25, 12), LatticeState::new(25, 4, 4)),
        ] {
            let field = field_for(&dg, goal, &fp);
            let a = plan(&dg, &prims, &field, &fp, start, goal, &off).unwrap();
            let b = ucs_cost(&dg, &prims, &fp, start, goal).unwrap();
            assert!((a.path.total_cost - b).abs() < 1e-9, "{} vs {b}", a.path.total_cost);
        }
    }

    #[test]
    fn trace_lists_expansions() {
        let dg = setup(30, 20, &[]);
        let fp = Footprint::default();
        let prims = PrimitiveSet::builtin(0.1);
        let (start, goal) = (LatticeState::new(5, 10, 0), LatticeState::new(20, 10, 0));
        let field = field_for(&dg, goal, &fp);
        let cfg = PlannerConfig {
            record_trace: true,
            ..Default::default()
        };
        let out = plan(&dg, &prims, &field, &fp, start, goal, &cfg).unwrap();
        assert_eq!(out.trace.len(), out.stats.expanded_states);
        let text = format_trace(&out.trace);
        assert!(text.starts_with("5 10 0\n"));
        assert!(text.trim_end().ends_with("20 10 0"));
    }

    #[test]
    fn broken_chain_is_reported() {
        let geom = GridGeometry::new(10, 10, 0.1, WorldPoint::default()).unwrap();
        let prims = PrimitiveSet::builtin(0.1);
        let links: ParentLinks = vec![
            (LatticeState::new(1, 1, 0), Some((1, 0))),
            (LatticeState::new(2, 1, 0), Some((0, 0))),
        ];
        assert!(matches!(
            reconstruct_path(&links, 0, &prims, &geom),
            Err(PlanError::BrokenParentChain(_))
        ));
    }
}
