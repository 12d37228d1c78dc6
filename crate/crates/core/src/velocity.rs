//! Spline smoothing and time-optimal speed profiling.
//!
//! The optimized polyline is interpolated by natural cubic splines over the chord
//! length parameter. Speeds are capped by the maximum velocity curve (MVC), the
//! pointwise minimum of `v_max` and the lateral-acceleration limit `sqrt(a_lat / |k|)`,
//! and then shaped by forward/backward integration of `v^2` under `a_max`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::WorldPoint;

pub const DEFAULT_MVC_STEP: f64 = 0.01;
/// Lower bound on speed inside the time integral only.
pub const V_FLOOR: f64 = 1e-3;
const ARC_TOL: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VelocityError {
    #[error("spline needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex {0} coincides with its successor")]
    DuplicateVertex(usize),
    #[error("{which} speed {v} exceeds the velocity limit {limit} there")]
    InfeasibleEndpoint { which: &'static str, v: f64, limit: f64 },
    #[error("invalid limits: {0}")]
    Limits(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinodynamicLimits {
    pub v_max: f64,
    pub a_max: f64,
    pub a_lat_max: Option<f64>,
}

impl Default for KinodynamicLimits {
    fn default() -> Self {
        Self {
            v_max: 0.7,
            a_max: 0.5,
            a_lat_max: Some(0.5),
        }
    }
}

impl KinodynamicLimits {
    pub fn validate(&self) -> Result<(), VelocityError> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.v_max) || !ok(self.a_max) || self.a_lat_max.is_some_and(|a| !ok(a)) {
            return Err(VelocityError::Limits(format!("{self:?}")));
        }
        Ok(())
    }
}

/// One natural cubic spline coordinate: knot values and second derivatives.
#[derive(Debug, Clone, PartialEq)]
struct Cubic {
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Cubic {
    fn natural(u: &[f64], y: &[f64]) -> Self {
        let n = y.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for interior second derivatives (Thomas algorithm).
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for j in 0..k {
                let i = j + 1;
                let (h0, h1) = (u[i] - u[i - 1], u[i + 1] - u[i]);
                diag[j] = 2.0 * (h0 + h1);
                upper[j] = h1;
                rhs[j] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            for j in 1..k {
                let lower = u[j + 1] - u[j];
                let w = lower / diag[j - 1];
                diag[j] -= w * upper[j - 1];
                rhs[j] -= w * rhs[j - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for j in (0..k - 1).rev() {
                m[j + 1] = (rhs[j] - upper[j] * m[j + 2]) / diag[j];
            }
        }
        Self { y: y.to_vec(), m }
    }

    /// Value, first and second derivative on segment `i` at local offset `t` in `[0, h]`.
    fn eval(&self, i: usize, h: f64, t: f64) -> (f64, f64, f64) {
        let (y0, y1, m0, m1) = (self.y[i], self.y[i + 1], self.m[i], self.m[i + 1]);
        let a = h - t;
        let v = m0 * a * a * a / (6.0 * h)
            + m1 * t * t * t / (6.0 * h)
            + (y0 / h - m0 * h / 6.0) * a
            + (y1 / h - m1 * h / 6.0) * t;
        let d = -m0 * a * a / (2.0 * h) + m1 * t * t / (2.0 * h) + (y1 - y0) / h
            - (m1 - m0) * h / 6.0;
        let dd = (m0 * a + m1 * t) / h;
        (v, d, dd)
    }
}

/// C2 path through the vertices with an arc-length table at the knots.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothPath {
    u: Vec<f64>,
    x: Cubic,
    y: Cubic,
    /// Arc length at each knot.
    s: Vec<f64>,
}

pub fn spline_smooth(vertices: &[WorldPoint]) -> Result<SmoothPath, VelocityError> {
    if vertices.len() < 3 {
        return Err(VelocityError::TooFewVertices(vertices.len()));
    }
    let mut u = vec![0.0];
    for (i, w) in vertices.windows(2).enumerate() {
        let d = w[0].distance(w[1]);
        if d <= 1e-9 {
            return Err(VelocityError::DuplicateVertex(i));
        }
        u.push(u[i] + d);
    }
    let xs: Vec<f64> = vertices.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = vertices.iter().map(|p| p.y).collect();
    let mut path = SmoothPath {
        x: Cubic::natural(&u, &xs),
        y: Cubic::natural(&u, &ys),
        u,
        s: Vec::new(),
    };
    let segs = path.u.len() - 1;
    let mut s = vec![0.0];
    for i in 0..segs {
        let h = path.u[i + 1] - path.u[i];
        s.push(s[i] + path.segment_length(i, 0.0, h, ARC_TOL / segs as f64));
    }
    path.s = s;
    Ok(path)
}

impl SmoothPath {
    pub fn length(&self) -> f64 {
        *self.s.last().unwrap()
    }

    pub fn knots(&self) -> &[f64] {
        &self.u
    }

    fn segment_of_u(&self, u: f64) -> usize {
        let last = self.u.len() - 2;
        match self.u.binary_search_by(|k| k.total_cmp(&u)) {
            Ok(i) => i.min(last),
            Err(i) => i.saturating_sub(1).min(last),
        }
    }

    fn eval(&self, u: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
        let i = self.segment_of_u(u);
        let h = self.u[i + 1] - self.u[i];
        let t = u - self.u[i];
        let (x, dx, ddx) = self.x.eval(i, h, t);
        let (y, dy, ddy) = self.y.eval(i, h, t);
        ([x, y], [dx, dy], [ddx, ddy])
    }

    pub fn point(&self, u: f64) -> WorldPoint {
        let (p, _, _) = self.eval(u);
        WorldPoint::new(p[0], p[1])
    }

    pub fn heading(&self, u: f64) -> f64 {
        let (_, d, _) = self.eval(u);
        d[1].atan2(d[0])
    }

    /// Signed curvature `(x'y'' - y'x'') / (x'^2 + y'^2)^(3/2)`.
    pub fn curvature(&self, u: f64) -> f64 {
        let (_, d, dd) = self.eval(u);
        let sp2 = d[0] * d[0] + d[1] * d[1];
        (d[0] * dd[1] - d[1] * dd[0]) / (sp2 * sp2.sqrt())
    }

    fn speed_on(&self, i: usize, h: f64, t: f64) -> f64 {
        let (_, dx, _) = self.x.eval(i, h, t);
        let (_, dy, _) = self.y.eval(i, h, t);
        dx.hypot(dy)
    }

    /// Adaptive Simpson integral of `|r'(u)|` over `[a, b]` on segment `i`.
    fn segment_length(&self, i: usize, a: f64, b: f64, tol: f64) -> f64 {
        let h = self.u[i + 1] - self.u[i];
        let f = |t: f64| self.speed_on(i, h, t);
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        simpson(&f, a, b, fa, fm, fb, whole, tol, 30)
    }

    /// Parameter at arc length `s`, clamped to the path.
    pub fn u_at_s(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length());
        let i = match self.s.binary_search_by(|k| k.total_cmp(&s)) {
            Ok(i) => return self.u[i],
            Err(i) => i.saturating_sub(1).min(self.u.len() - 2),
        };
        let h = self.u[i + 1] - self.u[i];
        let target = s - self.s[i];
        let (mut lo, mut hi) = (0.0, h);
        let mut t = h * target / (self.s[i + 1] - self.s[i]);
        for _ in 0..50 {
            let g = self.segment_length(i, 0.0, t, 1e-10) - target;
            if g.abs() < 1e-10 {
                break;
            }
            if g > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let d = self.speed_on(i, h, t);
            let newton = t - g / d;
            t = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        self.u[i] + t
    }

    pub fn point_at_s(&self, s: f64) -> WorldPoint {
        self.point(self.u_at_s(s))
    }

    pub fn heading_at_s(&self, s: f64) -> f64 {
        self.heading(self.u_at_s(s))
    }

    pub fn curvature_at_s(&self, s: f64) -> f64 {
        self.curvature(self.u_at_s(s))
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Speed cap sampled uniformly in arc length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mvc {
    pub s: Vec<f64>,
    pub v: Vec<f64>,
}

impl Mvc {
    /// Uniform samples from `0` to `s.last()`; at least one sample.
    pub fn new(s: Vec<f64>, v: Vec<f64>) -> Self {
        assert!(!s.is_empty() && s.len() == v.len());
        Self { s, v }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

/// MVC at `ceil(L / ds)` equal intervals (so the spacing is at most `ds`).
pub fn compute_mvc(path: &SmoothPath, lim: &KinodynamicLimits, ds: f64) -> Mvc {
    let len = path.length();
    let n = ((len / ds).ceil() as usize).max(1);
    let step = len / n as f64;
    let (mut s, mut v) = (Vec::with_capacity(n + 1), Vec::with_capacity(n + 1));
    for j in 0..=n {
        let sj = if j == n { len } else { j as f64 * step };
        let k = path.curvature_at_s(sj).abs();
        s.push(sj);
        v.push(mvc_value(k, lim));
    }
    Mvc { s, v }
}

pub fn mvc_value(curvature: f64, lim: &KinodynamicLimits) -> f64 {
    match lim.a_lat_max {
        Some(a) if curvature > 0.0 => lim.v_max.min((a / curvature).sqrt()),
        _ => lim.v_max,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityProfile {
    pub s: Vec<f64>,
    pub v: Vec<f64>,
    pub t: Vec<f64>,
    pub total_time: f64,
}

/// Forward pass from `v_start` under `+a_max`, backward pass from `v_end` under
/// `-a_max`, both clipped to the MVC; the profile is their pointwise minimum.
/// Interval times assume constant acceleration: `dt = 2 ds / (v_j + v_{j+1})`.
pub fn integrate_profile(
    mvc: &Mvc,
    lim: &KinodynamicLimits,
    v_start: f64,
    v_end: f64,
) -> Result<VelocityProfile, VelocityError> {
    lim.validate()?;
    let n = mvc.len();
    let slack = 1e-9;
    if v_start > mvc.v[0] + slack || v_start < 0.0 {
        return Err(VelocityError::InfeasibleEndpoint {
            which: "start",
            v: v_start,
            limit: mvc.v[0],
        });
    }
    if v_end > mvc.v[n - 1] + slack || v_end < 0.0 {
        return Err(VelocityError::InfeasibleEndpoint {
            which: "end",
            v: v_end,
            limit: mvc.v[n - 1],
        });
    }
    let mut fwd = vec![0.0; n];
    fwd[0] = v_start.min(mvc.v[0]);
    for j in 0..n - 1 {
        let ds = mvc.s[j + 1] - mvc.s[j];
        fwd[j + 1] = mvc.v[j + 1].min((fwd[j] * fwd[j] + 2.0 * lim.a_max * ds).sqrt());
    }
    let mut v = vec![0.0; n];
    v[n - 1] = v_end.min(mvc.v[n - 1]).min(fwd[n - 1]);
    for j in (0..n - 1).rev() {
        let ds = mvc.s[j + 1] - mvc.s[j];
        v[j] = fwd[j].min((v[j + 1] * v[j + 1] + 2.0 * lim.a_max * ds).sqrt());
    }
    let mut t = vec![0.0; n];
    for j in 0..n - 1 {
        let ds = mvc.s[j + 1] - mvc.s[j];
        t[j + 1] = t[j] + 2.0 * ds / (v[j] + v[j + 1]).max(2.0 * V_FLOOR);
    }
    Ok(VelocityProfile {
        s: mvc.s.clone(),
        total_time: t[n - 1],
        v,
        t,
    })
}

impl VelocityProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,v,t\n");
        for j in 0..self.s.len() {
            let _ = writeln!(out, "{:.6},{:.6},{:.6}", self.s[j], self.v[j], self.t[j]);
        }
        out
    }

    pub fn length(&self) -> f64 {
        *self.s.last().unwrap()
    }

    /// Arc length and speed reached after `time` seconds, assuming constant
    /// acceleration within each interval. Clamps to the end of the profile.
    pub fn state_at_time(&self, time: f64) -> (f64, f64) {
        let n = self.s.len();
        if time <= 0.0 {
            return (self.s[0], self.v[0]);
        }
        if time >= self.total_time {
            return (self.s[n - 1], self.v[n - 1]);
        }
        let j = match self.t.binary_search_by(|k| k.total_cmp(&time)) {
            Ok(j) => return (self.s[j], self.v[j]),
            Err(j) => j - 1,
        };
        let ds = self.s[j + 1] - self.s[j];
        let dt = self.t[j + 1] - self.t[j];
        let tau = time - self.t[j];
        let (v0, v1) = (self.v[j], self.v[j + 1]);
        let a = (v1 - v0) / dt;
        let s = (self.s[j] + v0 * tau + 0.5 * a * tau * tau).min(self.s[j] + ds);
        (s, v0 + a * tau)
    }
}

/// Closed-form rest-to-rest time on a straight path without a lateral limit.
pub fn trapezoid_time(length: f64, v_max: f64, a_max: f64) -> f64 {
    let ramp = v_max * v_max / a_max;
    if length >= ramp {
        2.0 * v_max / a_max + (length - ramp) / v_max
    } else {
        2.0 * (length / a_max).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn line(len: f64, n: usize) -> Vec<WorldPoint> {
        (0..=n)
            .map(|i| WorldPoint::new(len * i as f64 / n as f64, 0.0))
            .collect()
    }

    fn circle(r: f64, spacing: f64, arc: f64) -> Vec<WorldPoint> {
        let n = (arc * r / spacing).round() as usize;
        (0..=n)
            .map(|i| {
                let a = i as f64 * spacing / r;
                WorldPoint::new(r * a.cos(), r * a.sin())
            })
            .collect()
    }

    #[test]
    fn straight_line_has_no_curvature() {
        let p = spline_smooth(&line(3.0, 30)).unwrap();
        assert!((p.length() - 3.0).abs() < 1e-4);
        for k in 0..=100 {
            let u = 3.0 * k as f64 / 100.0;
            assert!(p.curvature(u).abs() < 1e-9);
        }
        let mvc = compute_mvc(&p, &KinodynamicLimits::default(), DEFAULT_MVC_STEP);
        assert_eq!(mvc.len(), 301);
        assert!(mvc.v.iter().all(|&v| v == 0.7));
    }

    #[test]
    fn interpolates_vertices() {
        let pts = circle(2.0, 0.1, PI);
        let p = spline_smooth(&pts).unwrap();
        for (i, q) in pts.iter().enumerate() {
            assert!(p.point(p.knots()[i]).distance(*q) < 1e-12);
        }
    }

    #[test]
    fn circle_curvature_and_mvc() {
        let pts = circle(2.0, 0.1, PI);
        let p = spline_smooth(&pts).unwrap();
        let len = p.length();
        assert!((len - 6.3).abs() < 0.01, "{len}");
        for k in 5..95 {
            let s = len * k as f64 / 100.0;
            let kappa = p.curvature_at_s(s);
            assert!((kappa - 0.5).abs() <= 0.01, "{kappa} at {s}");
        }
        let lim = KinodynamicLimits {
            v_max: 1.5,
            ..Default::default()
        };
        let mvc = compute_mvc(&p, &lim, DEFAULT_MVC_STEP);
        let mid = mvc.v[mvc.len() / 2];
        assert!((mid - 1.0).abs() < 0.01, "{mid}");
        // Resampling the input at twice the density barely changes the MVC.
        let dense = spline_smooth(&circle(2.0, 0.05, PI)).unwrap();
        let mvc2 = compute_mvc(&dense, &lim, DEFAULT_MVC_STEP);
        let m2 = mvc2.v[mvc2.len() / 2];
        assert!((mid - m2).abs() / mid < 0.01);
    }

    #[test]
    fn arc_length_inversion() {
        let p = spline_smooth(&circle(1.0, 0.1, PI / 2.0)).unwrap();
        for k in 0..=20 {
            let s = p.length() * k as f64 / 20.0;
            let u = p.u_at_s(s);
            let h = p.u_at_s(s + 1e-4);
            assert!(h >= u);
            let q = p.point_at_s(s);
            // On a unit circle, arc length equals the polar angle.
            assert!((q.y.atan2(q.x) - s).abs() < 2e-3, "{s}");
        }
    }

    #[test]
    fn trapezoid_rest_to_rest() {
        let p = spline_smooth(&line(3.0, 30)).unwrap();
        let lim = KinodynamicLimits::default();
        let mvc = compute_mvc(&p, &lim, DEFAULT_MVC_STEP);
        let prof = integrate_profile(&mvc, &lim, 0.0, 0.0).unwrap();
        let want = trapezoid_time(3.0, 0.7, 0.5);
        assert!((want - 5.686).abs() < 1e-3);
        assert!((prof.total_time - want).abs() < 1e-3, "{}", prof.total_time);
        assert_eq!(prof.v[0], 0.0);
        assert_eq!(*prof.v.last().unwrap(), 0.0);
    }

    #[test]
    fn triangular_profile_peak() {
        let p = spline_smooth(&line(0.6, 6)).unwrap();
        let lim = KinodynamicLimits::default();
        let prof = integrate_profile(&compute_mvc(&p, &lim, DEFAULT_MVC_STEP), &lim, 0.0, 0.0).unwrap();
        let peak = prof.v.iter().cloned().fold(0.0, f64::max);
        assert!((peak - (0.5f64 * 0.6).sqrt()).abs() < 1e-6);
        assert!((prof.total_time - trapezoid_time(0.6, 0.7, 0.5)).abs() < 1e-3);
    }

    #[test]
    fn degenerate_and_infeasible() {
        let lim = KinodynamicLimits::default();
        let mvc = Mvc::new(vec![0.0], vec![0.7]);
        assert_eq!(integrate_profile(&mvc, &lim, 0.0, 0.0).unwrap().total_time, 0.0);
        let mvc = Mvc::new(vec![0.0, 0.01], vec![0.3, 0.7]);
        assert!(matches!(
            integrate_profile(&mvc, &lim, 0.5, 0.0),
            Err(VelocityError::InfeasibleEndpoint { which: "start", .. })
        ));
        assert!(spline_smooth(&line(1.0, 1)).is_err());
        let dup = [WorldPoint::new(0.0, 0.0), WorldPoint::new(0.0, 0.0), WorldPoint::new(1.0, 0.0)];
        assert_eq!(spline_smooth(&dup), Err(VelocityError::DuplicateVertex(0)));
    }

    #[test]
    fn state_at_time_follows_profile() {
        let p = spline_smooth(&line(3.0, 30)).unwrap();
        let lim = KinodynamicLimits::default();
        let prof = integrate_profile(&compute_mvc(&p, &lim, DEFAULT_MVC_STEP), &lim, 0.0, 0.0).unwrap();
        // Halfway through the ramp: s = a t^2 / 2.
        let (s, v) = prof.state_at_time(0.7);
        assert!((s - 0.5 * 0.5 * 0.49).abs() < 2e-3, "{s}");
        assert!((v - 0.35).abs() < 2e-3);
        assert_eq!(prof.state_at_time(100.0).0, 3.0);
        assert!(prof.to_csv().starts_with("s,v,t\n0.000000,0.000000,0.000000\n"));
    }
}
