//! Soft-constrained local path deformation.
//!
//! The chain `x = (x_0, ..., x_{N-1})` minimizes
//!
//! ```text
//! f(x) = w_s * sum |x_{i+1} - 2 x_i + x_{i-1}|^2 + w_o * sum max(0, d_s - tau(x_i))^2
//! ```
//!
//! over the interior vertices, where `tau` is the interpolated obstacle distance.
//! Linearizing the residuals gives `f(x + dx) ~ c + 2 b^T dx + dx^T H dx` with the
//! Gauss-Newton `H = J^T W J` and `b = J^T W r`. Every residual touches at most three
//! consecutive vertices, so `H` has bandwidth 5 in the `2N` coordinates and each
//! damped step `(H + lambda I) dx = -b` is solved by [`banded_lu_solve`]. The first and
//! last vertices are fixed.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banded::{banded_lu_solve, BandedSystem};
use crate::geometry::WorldPoint;
use crate::gridmap::DistanceGrid;

/// Half-bandwidth of the assembled system.
pub const BANDWIDTH: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("chain needs at least 3 vertices, got {0}")]
    TooShort(usize),
    #[error("residual index {index} outside 1..={max}")]
    Index { index: usize, max: usize },
    #[error("chain vertex {0} is not finite")]
    NonFinite(usize),
    #[error("invalid optimizer configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub w_s: f64,
    pub w_o: f64,
    /// Safety distance, meters.
    pub d_s: f64,
    pub max_iterations: usize,
    pub lambda_init: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub lambda_max: f64,
    /// Stop when the step norm falls below this, meters.
    pub step_tol: f64,
    /// Stop when an accepted step lowers the objective by less than this.
    pub objective_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            w_s: 1.0,
            w_o: 10.0,
            d_s: 0.5,
            max_iterations: 100,
            lambda_init: 1e-4,
            lambda_up: 10.0,
            lambda_down: 10.0,
            lambda_max: 1e8,
            step_tol: 1e-6,
            objective_tol: 1e-9,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let positive = [
            ("w_s", self.w_s),
            ("w_o", self.w_o),
            ("d_s", self.d_s),
            ("lambda_init", self.lambda_init),
            ("lambda_max", self.lambda_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(OptimizeError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.lambda_up > 1.0 && self.lambda_down > 1.0) {
            return Err(OptimizeError::Config(
                "lambda factors must exceed 1".into(),
            ));
        }
        Ok(())
    }
}

/// `x_{i+1} - 2 x_i + x_{i-1}` for an interior vertex `i` (0-based, `1..=N-2`).
pub fn smoothness_residual(chain: &[WorldPoint], i: usize) -> Result<WorldPoint, OptimizeError> {
    if i == 0 || i + 1 >= chain.len() {
        return Err(OptimizeError::Index {
            index: i,
            max: chain.len().saturating_sub(2),
        });
    }
    Ok(chain[i + 1] - chain[i] * 2.0 + chain[i - 1])
}

/// Clearance and its gradient at a point. Off the interpolation domain the point
/// counts as touching an obstacle, with no usable gradient.
fn clearance(dg: &DistanceGrid, p: WorldPoint) -> (f64, (f64, f64)) {
    match (dg.interpolate_distance(p), dg.interpolate_gradient(p)) {
        (Ok(t), Ok(g)) => (t, g),
        _ => (0.0, (0.0, 0.0)),
    }
}

/// `max(0, d_s - tau(x_i))`.
pub fn obstacle_residual(
    chain: &[WorldPoint],
    i: usize,
    dg: &DistanceGrid,
    d_s: f64,
) -> Result<f64, OptimizeError> {
    if i == 0 || i + 1 >= chain.len() {
        return Err(OptimizeError::Index {
            index: i,
            max: chain.len().saturating_sub(2),
        });
    }
    Ok((d_s - clearance(dg, chain[i]).0).max(0.0))
}

/// Objective value `f(x)`.
pub fn objective(chain: &[WorldPoint], dg: &DistanceGrid, cfg: &OptimizerConfig) -> f64 {
    let mut f = 0.0;
    for i in 1..chain.len().saturating_sub(1) {
        let s = chain[i + 1] - chain[i] * 2.0 + chain[i - 1];
        let o = (cfg.d_s - clearance(dg, chain[i]).0).max(0.0);
        f += cfg.w_s * s.dot(s) + cfg.w_o * o * o;
    }
    f
}

#[derive(Debug, Clone)]
pub struct Assembly {
    /// `H` (undamped, fixed vertices clamped) with `b` as its right-hand side.
    pub system: BandedSystem,
    pub objective: f64,
}

/// Builds `H` and `b` around the current chain; the two endpoint vertices get
/// identity rows and zero right-hand side.
pub fn assemble(
    chain: &[WorldPoint],
    dg: &DistanceGrid,
    cfg: &OptimizerConfig,
) -> Result<Assembly, OptimizeError> {
    let n = chain.len();
    if n < 3 {
        return Err(OptimizeError::TooShort(n));
    }
    if let Some(i) = chain.iter().position(|p| !p.is_finite()) {
        return Err(OptimizeError::NonFinite(i));
    }
    let mut sys = BandedSystem::new(2 * n, BANDWIDTH);
    let mut f = 0.0;
    const C: [f64; 3] = [1.0, -2.0, 1.0];
    for i in 1..n - 1 {
        let s = chain[i + 1] - chain[i] * 2.0 + chain[i - 1];
        f += cfg.w_s * s.dot(s);
        for (a, ca) in C.iter().enumerate() {
            let va = i + a - 1;
            sys.rhs[2 * va] += cfg.w_s * ca * s.x;
            sys.rhs[2 * va + 1] += cfg.w_s * ca * s.y;
            for (b, cb) in C.iter().enumerate().skip(a) {
                let vb = i + b - 1;
                let h = cfg.w_s * ca * cb;
                sys.add(2 * va, 2 * vb, h);
                sys.add(2 * va + 1, 2 * vb + 1, h);
            }
        }

        let (tau, (gx, gy)) = clearance(dg, chain[i]);
        if tau < cfg.d_s {
            let o = cfg.d_s - tau;
            f += cfg.w_o * o * o;
            // J^o = -grad tau.
            let (jx, jy) = (-gx, -gy);
            sys.rhs[2 * i] += cfg.w_o * jx * o;
            sys.rhs[2 * i + 1] += cfg.w_o * jy * o;
            sys.add(2 * i, 2 * i, cfg.w_o * jx * jx);
            sys.add(2 * i, 2 * i + 1, cfg.w_o * jx * jy);
            sys.add(2 * i + 1, 2 * i + 1, cfg.w_o * jy * jy);
        }
    }
    // Only the upper triangle was accumulated; mirror it so H is exactly symmetric.
    for r in 0..2 * n {
        for c in r + 1..(r + BANDWIDTH + 1).min(2 * n) {
            sys.set(c, r, sys.get(r, c));
        }
    }
    for d in [0, 1, 2 * n - 2, 2 * n - 1] {
        sys.clamp(d);
    }
    Ok(Assembly {
        system: sys,
        objective: f,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizeStatus {
    /// Step norm below tolerance.
    StepConverged,
    /// Objective decrease below tolerance.
    ObjectiveConverged,
    MaxIterations,
    /// Damping hit its ceiling without an acceptable step; best-so-far returned.
    NonConverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Objective after this iteration (of the kept chain).
    pub objective: f64,
    /// Damping used for this iteration's solve.
    pub lambda: f64,
    pub step_norm: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub status: OptimizeStatus,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub iterations: Vec<IterationRecord>,
}

impl OptimizeReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,objective,lambda,step_norm,accepted\n");
        for r in &self.iterations {
            let _ = writeln!(
                out,
                "{},{:.12e},{:.3e},{:.6e},{}",
                r.iteration, r.objective, r.lambda, r.step_norm, r.accepted
            );
        }
        out
    }
}

/// Levenberg-Marquardt iteration. A step is kept only if it lowers the objective; a
/// rejected step restores the previous chain and raises the damping.
pub fn optimize(
    chain: &[WorldPoint],
    dg: &DistanceGrid,
    cfg: &OptimizerConfig,
) -> Result<(Vec<WorldPoint>, OptimizeReport), OptimizeError> {
    cfg.validate()?;
    let mut x = chain.to_vec();
    let mut asm = assemble(&x, dg, cfg)?;
    let initial = asm.objective;
    let mut lambda = cfg.lambda_init;
    let mut records = Vec::new();
    let mut status = OptimizeStatus::MaxIterations;

    for iteration in 1..=cfg.max_iterations {
        let mut sys = asm.system.clone();
        sys.add_diagonal(lambda);
        let used = lambda;
        let step = match banded_lu_solve(&sys) {
            Ok(s) => s,
            Err(_) => {
                records.push(IterationRecord {
                    iteration,
                    objective: asm.objective,
                    lambda: used,
                    step_norm: f64::NAN,
                    accepted: false,
                });
                lambda *= cfg.lambda_up;
                if lambda > cfg.lambda_max {
                    status = OptimizeStatus::NonConverged;
                    break;
                }
                continue;
            }
        };
        let step_norm = step.iter().map(|v| v * v).sum::<f64>().sqrt();
        if step_norm < cfg.step_tol {
            records.push(IterationRecord {
                iteration,
                objective: asm.objective,
                lambda: used,
                step_norm,
                accepted: true,
            });
            status = OptimizeStatus::StepConverged;
            break;
        }
        let trial: Vec<WorldPoint> = x
            .iter()
            .enumerate()
            .map(|(i, p)| WorldPoint::new(p.x + step[2 * i], p.y + step[2 * i + 1]))
            .collect();
        let f_trial = objective(&trial, dg, cfg);
        if f_trial < asm.objective {
            let decrease = asm.objective - f_trial;
            x = trial;
            asm = assemble(&x, dg, cfg)?;
            lambda = (lambda / cfg.lambda_down).max(f64::MIN_POSITIVE);
            records.push(IterationRecord {
                iteration,
                objective: asm.objective,
                lambda: used,
                step_norm,
                accepted: true,
            });
            if decrease < cfg.objective_tol {
                status = OptimizeStatus::ObjectiveConverged;
                break;
            }
        } else {
            records.push(IterationRecord {
                iteration,
                objective: asm.objective,
                lambda: used,
                step_norm,
                accepted: false,
            });
            lambda *= cfg.lambda_up;
            if lambda > cfg.lambda_max {
                status = OptimizeStatus::NonConverged;
                break;
            }
        }
    }
    let report = OptimizeReport {
        status,
        initial_objective: initial,
        final_objective: asm.objective,
        iterations: records,
    };
    Ok((x, report))
}

/// Smallest interpolated clearance over the interior vertices.
pub fn min_interior_clearance(chain: &[WorldPoint], dg: &DistanceGrid) -> f64 {
    chain
        .iter()
        .skip(1)
        .take(chain.len().saturating_sub(2))
        .map(|&p| clearance(dg, p).0)
        .fold(f64::INFINITY, f64::min)
}

/// Points spaced `step` apart along a polyline, starting at its first vertex and
/// stopping at `max_length` or at the polyline's end, which is then always included.
pub fn resample_polyline(points: &[WorldPoint], step: f64, max_length: f64) -> Vec<WorldPoint> {
    let Some(&first) = points.first() else {
        return Vec::new();
    };
    let mut out = vec![first];
    let mut travelled = 0.0;
    let mut next = step;
    for w in points.windows(2) {
        let seg = w[0].distance(w[1]);
        if seg == 0.0 {
            continue;
        }
        while next <= travelled + seg + 1e-12 && next <= max_length + 1e-12 {
            let t = ((next - travelled) / seg).min(1.0);
            out.push(w[0] + (w[1] - w[0]) * t);
            next += step;
        }
        travelled += seg;
        if travelled >= max_length - 1e-12 {
            return out;
        }
    }
    let last = points[points.len() - 1];
    let tail = out[out.len() - 1].distance(last);
    if tail > 1e-9 {
        // Merge a short tail into the endpoint instead of leaving a tiny segment.
        if out.len() >= 2 && tail < 0.5 * step {
            out.pop();
        }
        out.push(last);
    }
    out
}
