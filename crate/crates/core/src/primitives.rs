//! Motion primitives: the precomputed, kinematically feasible moves that connect lattice
//! states.
//!
//! Primitives are generated from constant-curvature arcs driven at constant linear
//! speed plus in-place turns at constant angular speed, snapped onto the lattice, and
//! stored per start heading. Every set carries exactly one forward step and one
//! in-place turn in each direction for every heading; the planner relies on those to
//! stay complete when pruning is enabled.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{wrap_angle, Pose2};

pub const DEFAULT_NUM_ANGLES: usize = 16;
/// Upper bound on the distance between consecutive sampled poses (one local-grid cell).
pub const MAX_POSE_SPACING: f64 = 0.05;
/// Angular sampling step for in-place turns.
const TURN_SAMPLE_STEP: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrimitiveError {
    #[error("invalid primitive configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "arc (length {length_cells:.3} cells, curvature {curvature:.4}/cell) from angle {start_itheta} \
         does not snap onto the lattice: position residual {position_residual:.3} cells, \
         heading residual {heading_residual:.4} rad"
    )]
    SnapFailed {
        start_itheta: usize,
        length_cells: f64,
        curvature: f64,
        position_residual: f64,
        heading_residual: f64,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("primitive {prim_id} (start angle {start_itheta}): {message}")]
    Invariant {
        prim_id: usize,
        start_itheta: usize,
        message: String,
    },
    #[error("primitive set violates an invariant: {0}")]
    SetInvariant(String),
    #[error("primitive resolution {file} m/cell does not match the map resolution {expected} m/cell")]
    ResolutionMismatch { file: f64, expected: f64 },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Discrete lattice state: cell indices plus heading bin.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeState {
    pub ix: i32,
    pub iy: i32,
    pub itheta: usize,
}

impl LatticeState {
    pub const fn new(ix: i32, iy: i32, itheta: usize) -> Self {
        Self { ix, iy, itheta }
    }
}

/// Heading of bin `itheta`, wrapped into `(-pi, pi]`.
pub fn bin_angle(itheta: usize, num_angles: usize) -> f64 {
    wrap_angle(itheta as f64 * 2.0 * PI / num_angles as f64)
}

/// Nearest heading bin for an angle.
pub fn angle_bin(theta: f64, num_angles: usize) -> usize {
    let step = 2.0 * PI / num_angles as f64;
    let k = (theta / step).round() as i64;
    k.rem_euclid(num_angles as i64) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrimitiveKind {
    ForwardStep,
    TurnLeftInPlace,
    TurnRightInPlace,
    General,
}

impl PrimitiveKind {
    /// The three kinds that pruning never removes.
    pub fn is_basic(self) -> bool {
        !matches!(self, PrimitiveKind::General)
    }
}

impl fmt::Display for PrimitiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrimitiveKind::ForwardStep => "forward_step",
            PrimitiveKind::TurnLeftInPlace => "turn_left_in_place",
            PrimitiveKind::TurnRightInPlace => "turn_right_in_place",
            PrimitiveKind::General => "general",
        })
    }
}

impl FromStr for PrimitiveKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "forward_step" => Ok(PrimitiveKind::ForwardStep),
            "turn_left_in_place" => Ok(PrimitiveKind::TurnLeftInPlace),
            "turn_right_in_place" => Ok(PrimitiveKind::TurnRightInPlace),
            "general" => Ok(PrimitiveKind::General),
            other => Err(format!("unknown primitive kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionPrimitive {
    pub id: usize,
    pub start_itheta: usize,
    /// `(dix, diy, itheta_end)`.
    pub end_offset: (i32, i32, usize),
    /// Poses relative to the start cell center, meters and radians.
    pub poses: Vec<Pose2>,
    /// Travel time in seconds.
    pub cost: f64,
    pub kind: PrimitiveKind,
}

impl MotionPrimitive {
    /// Lattice state reached when applying this primitive from `from`.
    pub fn apply(&self, from: LatticeState) -> LatticeState {
        LatticeState::new(
            from.ix + self.end_offset.0,
            from.iy + self.end_offset.1,
            self.end_offset.2,
        )
    }

    pub fn has_translation(&self) -> bool {
        self.end_offset.0 != 0 || self.end_offset.1 != 0
    }
}

/// Length of an arc specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ArcLength {
    /// Absolute length in cells.
    Cells(f64),
    /// Multiple of the heading's shortest lattice-aligned step: 1 cell for axis
    /// headings, sqrt(2) for diagonals, sqrt(5) for the headings in between.
    Steps(f64),
}

/// Constant-curvature arc driven forward. Curvature is per cell, positive turns left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcSpec {
    pub length: ArcLength,
    pub curvature: f64,
    pub kind: PrimitiveKind,
}

impl ArcSpec {
    pub fn straight(length: ArcLength) -> Self {
        Self {
            length,
            curvature: 0.0,
            kind: PrimitiveKind::General,
        }
    }

    pub fn forward_step() -> Self {
        Self {
            length: ArcLength::Steps(1.0),
            curvature: 0.0,
            kind: PrimitiveKind::ForwardStep,
        }
    }

    /// Arc turning by `angle` radians (signed) on a circle of `radius` cells.
    pub fn turn(angle: f64, radius: f64) -> Self {
        Self {
            length: ArcLength::Cells(angle.abs() * radius),
            curvature: angle.signum() / radius,
            kind: PrimitiveKind::General,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveConfig {
    pub num_angles: usize,
    /// Meters per cell.
    pub resolution: f64,
    /// Assumed constant linear speed, m/s.
    pub v_lin: f64,
    /// Assumed constant in-place turning speed, rad/s.
    pub v_ang: f64,
    pub arcs: Vec<ArcSpec>,
}

impl Default for PrimitiveConfig {
    /// Builtin inventory: one- and two-step forward moves, quarter-circle arcs of
    /// two-cell radius to either side, and the two in-place turns.
    fn default() -> Self {
        Self {
            num_angles: DEFAULT_NUM_ANGLES,
            resolution: 0.1,
            v_lin: 0.7,
            v_ang: 1.0,
            arcs: vec![
                ArcSpec::forward_step(),
                ArcSpec::straight(ArcLength::Steps(2.0)),
                ArcSpec::turn(PI / 2.0, 2.0),
                ArcSpec::turn(-PI / 2.0, 2.0),
            ],
        }
    }
}

/// Immutable, per-heading collection of primitives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveSet {
    num_angles: usize,
    resolution: f64,
    by_angle: Vec<Vec<MotionPrimitive>>,
}

/// Shortest integer step whose direction lies within half a bin of `theta`.
fn lattice_step(theta: f64, num_angles: usize) -> (i32, i32) {
    let half_bin = PI / num_angles as f64;
    let mut best: Option<((i32, i32), i32)> = None;
    for r in 1..=8i32 {
        for a in -r..=r {
            for b in -r..=r {
                if a.abs().max(b.abs()) != r {
                    continue;
                }
                let dev = wrap_angle((b as f64).atan2(a as f64) - theta).abs();
                if dev <= half_bin + 1e-12 {
                    let len2 = a * a + b * b;
                    if best.is_none_or(|(_, l)| len2 < l) {
                        best = Some(((a, b), len2));
                    }
                }
            }
        }
        if let Some((v, _)) = best {
            return v;
        }
    }
    (1, 0)
}

/// Pose reached after driving `s` cells along an arc of curvature `kappa` (per cell),
/// starting at the origin with heading `theta0`. Position is in cells.
fn arc_point(theta0: f64, kappa: f64, s: f64) -> (f64, f64, f64) {
    if kappa.abs() < 1e-12 {
        (s * theta0.cos(), s * theta0.sin(), theta0)
    } else {
        let theta = theta0 + kappa * s;
        (
            (theta.sin() - theta0.sin()) / kappa,
            -(theta.cos() - theta0.cos()) / kappa,
            theta,
        )
    }
}

/// Generates a primitive set from arc specifications plus the two in-place turns.
pub fn generate_arc_primitives(cfg: &PrimitiveConfig) -> Result<PrimitiveSet, PrimitiveError> {
    let n = cfg.num_angles;
    if n < 4 || n % 4 != 0 {
        return Err(PrimitiveError::InvalidConfig(format!(
            "num_angles must be a positive multiple of 4, got {n}"
        )));
    }
    if !(cfg.v_lin > 0.0 && cfg.v_ang > 0.0 && cfg.resolution > 0.0) {
        return Err(PrimitiveError::InvalidConfig(
            "velocities and resolution must be positive".into(),
        ));
    }
    let forward_count = cfg
        .arcs
        .iter()
        .filter(|a| a.kind == PrimitiveKind::ForwardStep)
        .count();
    if forward_count != 1 {
        return Err(PrimitiveError::InvalidConfig(format!(
            "exactly one arc must be the forward step, found {forward_count}"
        )));
    }
    let bin = 2.0 * PI / n as f64;
    let res = cfg.resolution;
    let mut by_angle = Vec::with_capacity(n);
    let mut next_id = 0;
    for start in 0..n {
        let theta0 = bin_angle(start, n);
        let mut prims = Vec::new();
        for spec in &cfg.arcs {
            if matches!(
                spec.kind,
                PrimitiveKind::TurnLeftInPlace | PrimitiveKind::TurnRightInPlace
            ) {
                return Err(PrimitiveError::InvalidConfig(
                    "in-place turns are generated automatically".into(),
                ));
            }
            if spec.kind == PrimitiveKind::ForwardStep && spec.curvature != 0.0 {
                return Err(PrimitiveError::InvalidConfig(
                    "the forward step must be straight".into(),
                ));
            }
            let length = match spec.length {
                ArcLength::Cells(l) => l,
                ArcLength::Steps(m) => {
                    let (a, b) = lattice_step(theta0, n);
                    m * f64::from(a).hypot(f64::from(b))
                }
            };
            if !(length > 0.0 && length.is_finite()) {
                return Err(PrimitiveError::InvalidConfig(format!(
                    "arc length must be positive, got {length}"
                )));
            }
            let (ex, ey, etheta) = arc_point(theta0, spec.curvature, length);
            let dix = ex.round() as i32;
            let diy = ey.round() as i32;
            let end_bin = angle_bin(etheta, n);
            let (rx, ry) = (f64::from(dix) - ex, f64::from(diy) - ey);
            let position_residual = rx.hypot(ry);
            let heading_residual = wrap_angle(bin_angle(end_bin, n) - etheta);
            if position_residual > 0.5 || heading_residual.abs() > bin / 2.0 || (dix == 0 && diy == 0)
            {
                return Err(PrimitiveError::SnapFailed {
                    start_itheta: start,
                    length_cells: length,
                    curvature: spec.curvature,
                    position_residual,
                    heading_residual,
                });
            }
            // Spread the snap residual linearly along the motion so the last pose lands
            // on the lattice state exactly.
            let segments =
                ((((length + position_residual) * res) / MAX_POSE_SPACING).ceil() as usize).max(1);
            let mut poses = Vec::with_capacity(segments + 1);
            for k in 0..=segments {
                let u = k as f64 / segments as f64;
                let (x, y, th) = arc_point(theta0, spec.curvature, u * length);
                poses.push(Pose2::new(
                    (x + u * rx) * res,
                    (y + u * ry) * res,
                    wrap_angle(th + u * heading_residual),
                ));
            }
            if let Some(last) = poses.last_mut() {
                *last = Pose2::new(
                    f64::from(dix) * res,
                    f64::from(diy) * res,
                    bin_angle(end_bin, n),
                );
            }
            prims.push(MotionPrimitive {
                id: 0,
                start_itheta: start,
                end_offset: (dix, diy, end_bin),
                poses,
                cost: length * res / cfg.v_lin,
                kind: spec.kind,
            });
        }
        for (kind, dir) in [
            (PrimitiveKind::TurnLeftInPlace, 1.0),
            (PrimitiveKind::TurnRightInPlace, -1.0),
        ] {
            let end_bin = (start as i64 + dir as i64).rem_euclid(n as i64) as usize;
            let segments = ((bin / TURN_SAMPLE_STEP).ceil() as usize).max(1);
            let mut poses: Vec<Pose2> = (0..=segments)
                .map(|k| Pose2::new(0.0, 0.0, wrap_angle(theta0 + dir * bin * k as f64 / segments as f64)))
                .collect();
            if let Some(last) = poses.last_mut() {
                last.theta = bin_angle(end_bin, n);
            }
            prims.push(MotionPrimitive {
                id: 0,
                start_itheta: start,
                end_offset: (0, 0, end_bin),
                poses,
                cost: bin / cfg.v_ang,
                kind,
            });
        }
        for p in &mut prims {
            p.id = next_id;
            next_id += 1;
        }
        by_angle.push(prims);
    }
    PrimitiveSet::new(n, res, by_angle)
}

impl PrimitiveSet {
    /// Assembles a set and validates every invariant.
    pub fn new(
        num_angles: usize,
        resolution: f64,
        by_angle: Vec<Vec<MotionPrimitive>>,
    ) -> Result<Self, PrimitiveError> {
        let set = Self {
            num_angles,
            resolution,
            by_angle,
        };
        set.validate()?;
        Ok(set)
    }

    /// Builtin set for a grid resolution.
    pub fn builtin(resolution: f64) -> Self {
        generate_arc_primitives(&PrimitiveConfig {
            resolution,
            ..PrimitiveConfig::default()
        })
        .expect("builtin primitive inventory is valid")
    }

    pub fn num_angles(&self) -> usize {
        self.num_angles
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn for_angle(&self, itheta: usize) -> &[MotionPrimitive] {
        &self.by_angle[itheta]
    }

    pub fn iter(&self) -> impl Iterator<Item = &MotionPrimitive> {
        self.by_angle.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.by_angle.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Looks a primitive up by id.
    pub fn get(&self, id: usize) -> Option<&MotionPrimitive> {
        self.iter().find(|p| p.id == id)
    }

    pub fn check_resolution(&self, expected: f64) -> Result<(), PrimitiveError> {
        if (self.resolution - expected).abs() > 1e-9 * expected.abs().max(1.0) {
            return Err(PrimitiveError::ResolutionMismatch {
                file: self.resolution,
                expected,
            });
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), PrimitiveError> {
        let n = self.num_angles;
        if n == 0 || self.by_angle.len() != n {
            return Err(PrimitiveError::SetInvariant(format!(
                "expected primitives for {n} headings, found {}",
                self.by_angle.len()
            )));
        }
        if !(self.resolution > 0.0) {
            return Err(PrimitiveError::SetInvariant(format!(
                "resolution must be positive, got {}",
                self.resolution
            )));
        }
        let res = self.resolution;
        let bin = 2.0 * PI / n as f64;
        let mut seen_ids = std::collections::HashSet::new();
        for (angle, prims) in self.by_angle.iter().enumerate() {
            for kind in [
                PrimitiveKind::ForwardStep,
                PrimitiveKind::TurnLeftInPlace,
                PrimitiveKind::TurnRightInPlace,
            ] {
                let count = prims.iter().filter(|p| p.kind == kind).count();
                if count != 1 {
                    return Err(PrimitiveError::SetInvariant(format!(
                        "start angle {angle} has {count} primitives of kind {kind}, expected exactly one"
                    )));
                }
            }
            for p in prims {
                let bad = |message: String| PrimitiveError::Invariant {
                    prim_id: p.id,
                    start_itheta: p.start_itheta,
                    message,
                };
                if !seen_ids.insert(p.id) {
                    return Err(bad("duplicate primitive id".into()));
                }
                if p.start_itheta != angle {
                    return Err(bad(format!("listed under start angle {angle}")));
                }
                if p.end_offset.2 >= n {
                    return Err(bad(format!("end heading {} out of range", p.end_offset.2)));
                }
                if !(p.cost > 0.0 && p.cost.is_finite()) {
                    return Err(bad(format!("cost must be positive, got {}", p.cost)));
                }
                let (Some(first), Some(last)) = (p.poses.first(), p.poses.last()) else {
                    return Err(bad("no intermediate poses".into()));
                };
                let start_err = first.x.hypot(first.y);
                let start_heading = wrap_angle(first.theta - bin_angle(angle, n)).abs();
                if start_err > 0.5 * res || start_heading > bin / 2.0 {
                    return Err(bad("first pose does not match the start state".into()));
                }
                let ex = f64::from(p.end_offset.0) * res;
                let ey = f64::from(p.end_offset.1) * res;
                let end_err = (last.x - ex).hypot(last.y - ey);
                let end_heading = wrap_angle(last.theta - bin_angle(p.end_offset.2, n)).abs();
                if end_err > 0.5 * res || end_heading > bin / 2.0 {
                    return Err(bad(format!(
                        "last pose misses the end state by {end_err:.4} m / {end_heading:.4} rad"
                    )));
                }
                if let Some(gap) = p
                    .poses
                    .windows(2)
                    .map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y))
                    .find(|&d| d > MAX_POSE_SPACING + 1e-9)
                {
                    return Err(bad(format!(
                        "consecutive poses {gap:.4} m apart, limit is {MAX_POSE_SPACING} m"
                    )));
                }
                let ok_shape = match p.kind {
                    PrimitiveKind::ForwardStep => p.has_translation() && p.end_offset.2 == angle,
                    PrimitiveKind::TurnLeftInPlace => {
                        !p.has_translation() && p.end_offset.2 == (angle + 1) % n
                    }
                    PrimitiveKind::TurnRightInPlace => {
                        !p.has_translation() && p.end_offset.2 == (angle + n - 1) % n
                    }
                    PrimitiveKind::General => true,
                };
                if !ok_shape {
                    return Err(bad(format!("end offset {:?} inconsistent with kind {}", p.end_offset, p.kind)));
                }
            }
        }
        Ok(())
    }

    /// Text serialization; floats use the shortest round-trip representation.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "resolution_m: {}", self.resolution);
        let _ = writeln!(out, "num_angles: {}", self.num_angles);
        let _ = writeln!(out, "total_primitives: {}", self.len());
        for p in self.iter() {
            let _ = writeln!(out, "prim_id: {}", p.id);
            let _ = writeln!(out, "start_angle_index: {}", p.start_itheta);
            let _ = writeln!(
                out,
                "end_pose_offset: {} {} {}",
                p.end_offset.0, p.end_offset.1, p.end_offset.2
            );
            let _ = writeln!(out, "cost_s: {}", p.cost);
            let _ = writeln!(out, "kind: {}", p.kind);
            let _ = writeln!(out, "num_poses: {}", p.poses.len());
            for q in &p.poses {
                let _ = writeln!(out, "{} {} {}", q.x, q.y, q.theta);
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, PrimitiveError> {
        let mut reader = LineReader::new(text);
        fn num<T: FromStr>(line: usize, v: &str, what: &str) -> Result<T, PrimitiveError> {
            v.parse().map_err(|_| PrimitiveError::Parse {
                line,
                message: format!("invalid {what} `{v}`"),
            })
        }
        let (l, v) = reader.field("resolution_m")?;
        let resolution: f64 = num(l, &v, "resolution")?;
        let (l, v) = reader.field("num_angles")?;
        let num_angles: usize = num(l, &v, "angle count")?;
        let (l, v) = reader.field("total_primitives")?;
        let total: usize = num(l, &v, "primitive count")?;
        if num_angles == 0 || num_angles > 1024 {
            return Err(PrimitiveError::Parse {
                line: l,
                message: format!("num_angles {num_angles} out of range"),
            });
        }
        let mut by_angle = vec![Vec::new(); num_angles];
        for _ in 0..total {
            let (l, v) = reader.field("prim_id")?;
            let id: usize = num(l, &v, "primitive id")?;
            let (l, v) = reader.field("start_angle_index")?;
            let start: usize = num(l, &v, "start angle")?;
            if start >= num_angles {
                return Err(PrimitiveError::Parse {
                    line: l,
                    message: format!("start angle {start} >= num_angles {num_angles}"),
                });
            }
            let (l, v) = reader.field("end_pose_offset")?;
            let parts: Vec<&str> = v.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(PrimitiveError::Parse {
                    line: l,
                    message: "end_pose_offset needs three integers".into(),
                });
            }
            let end_offset = (
                num(l, parts[0], "x offset")?,
                num(l, parts[1], "y offset")?,
                num(l, parts[2], "end angle")?,
            );
            let (l, v) = reader.field("cost_s")?;
            let cost: f64 = num(l, &v, "cost")?;
            let (l, v) = reader.field("kind")?;
            let kind: PrimitiveKind = v
                .parse()
                .map_err(|message| PrimitiveError::Parse { line: l, message })?;
            let (l, v) = reader.field("num_poses")?;
            let count: usize = num(l, &v, "pose count")?;
            let mut poses = Vec::with_capacity(count.min(4096));
            for _ in 0..count {
                let (l, content) = reader.next_line().ok_or_else(|| PrimitiveError::Parse {
                    line: reader.last_line,
                    message: "unexpected end of file inside pose list".into(),
                })?;
                let vals: Vec<&str> = content.split_whitespace().collect();
                if vals.len() != 3 {
                    return Err(PrimitiveError::Parse {
                        line: l,
                        message: format!("expected `x y theta`, got `{content}`"),
                    });
                }
                poses.push(Pose2::new(
                    num(l, vals[0], "x")?,
                    num(l, vals[1], "y")?,
                    num(l, vals[2], "theta")?,
                ));
            }
            by_angle[start].push(MotionPrimitive {
                id,
                start_itheta: start,
                end_offset,
                poses,
                cost,
                kind,
            });
        }
        if let Some((l, content)) = reader.next_line() {
            return Err(PrimitiveError::Parse {
                line: l,
                message: format!("trailing content after {total} primitives: `{content}`"),
            });
        }
        Self::new(num_angles, resolution, by_angle)
    }

    pub fn save(&self, path: &Path) -> Result<(), PrimitiveError> {
        fs::write(path, self.to_text()).map_err(|e| PrimitiveError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

struct LineReader<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> LineReader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text
                .lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
                .collect(),
            pos: 0,
            last_line: text.lines().count(),
        }
    }

    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        let item = self.lines.get(self.pos).copied();
        self.pos += 1;
        item
    }

    /// Next line, which must be `key: value`; returns the line number and value.
    fn field(&mut self, key: &str) -> Result<(usize, String), PrimitiveError> {
        let (line, content) = self.next_line().ok_or_else(|| PrimitiveError::Parse {
            line: self.last_line,
            message: format!("unexpected end of file, expected `{key}:`"),
        })?;
        let (k, v) = content.split_once(':').ok_or_else(|| PrimitiveError::Parse {
            line,
            message: format!("expected `{key}:`, got `{content}`"),
        })?;
        if k.trim() != key {
            return Err(PrimitiveError::Parse {
                line,
                message: format!("expected `{key}:`, got `{}:`", k.trim()),
            });
        }
        Ok((line, v.trim().to_string()))
    }
}

/// Reads and validates a primitive file.
pub fn load_primitive_file(path: &Path) -> Result<PrimitiveSet, PrimitiveError> {
    let text = fs::read_to_string(path).map_err(|e| PrimitiveError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    PrimitiveSet::parse(&text)
}
