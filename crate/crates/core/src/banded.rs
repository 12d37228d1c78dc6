//! Banded matrices and an LU solver confined to the band.
//!
//! Storage is row-major with `2k + 1` slots per row; entry `(i, j)` lives at
//! `i * (2k + 1) + (j + k - i)`. Factorization does no pivoting, so it is meant for
//! symmetric positive-definite systems; a non-positive pivot is reported instead of
//! producing garbage. Cost is `O(k^2 n)` time and `O(k n)` memory.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("non-positive pivot {value:e} at row {row}")]
    Pivot { row: usize, value: f64 },
    #[error("right-hand side has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

/// Square matrix with half-bandwidth `k` plus a right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSystem {
    n: usize,
    k: usize,
    band: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl BandedSystem {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            band: vec![0.0; n * (2 * k + 1)],
            rhs: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.k
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i.abs_diff(j) <= self.k && i < self.n && j < self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * (2 * self.k + 1) + (j + self.k - i)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.band[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Panics outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band {}", self.k);
        let s = self.slot(i, j);
        self.band[s] = v;
    }

    /// Panics outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(self.in_band(i, j), "({i}, {j}) outside band {}", self.k);
        let s = self.slot(i, j);
        self.band[s] += v;
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self.add(i, i, v);
        }
    }

    /// Replaces row and column `d` by the identity and zeroes `rhs[d]`.
    pub fn clamp(&mut self, d: usize) {
        let lo = d.saturating_sub(self.k);
        let hi = (d + self.k).min(self.n - 1);
        for j in lo..=hi {
            self.set(d, j, 0.0);
            self.set(j, d, 0.0);
        }
        self.set(d, d, 1.0);
        self.rhs[d] = 0.0;
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.k);
                let hi = (i + self.k).min(self.n - 1);
                (lo..=hi).map(|j| self.band[self.slot(i, j)] * x[j]).sum()
            })
            .collect()
    }
}

/// Solves `A dx = -b` for the system's matrix `A` and right-hand side `b`.
///
/// `A = LU` is factored in place within the band (`L` unit lower, `U` upper, both
/// with bandwidth `k`), then `L y = -b` by forward elimination and `U dx = y` by back
/// substitution.
pub fn banded_lu_solve(sys: &BandedSystem) -> Result<Vec<f64>, SolveError> {
    let (n, k) = (sys.n, sys.k);
    if sys.rhs.len() != n {
        return Err(SolveError::Dimension {
            expected: n,
            got: sys.rhs.len(),
        });
    }
    let w = 2 * k + 1;
    let mut a = sys.band.clone();
    let at = |i: usize, j: usize| i * w + (j + k - i);

    for p in 0..n {
        let pivot = a[at(p, p)];
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(SolveError::Pivot {
                row: p,
                value: pivot,
            });
        }
        let end = (p + k + 1).min(n);
        for i in p + 1..end {
            let l = a[at(i, p)] / pivot;
            if l == 0.0 {
                continue;
            }
            a[at(i, p)] = l;
            for j in p + 1..end {
                a[at(i, j)] -= l * a[at(p, j)];
            }
        }
    }

    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = -sys.rhs[i];
        for j in i.saturating_sub(k)..i {
            s -= a[at(i, j)] * y[j];
        }
        y[i] = s;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in i + 1..(i + k + 1).min(n) {
            s -= a[at(i, j)] * x[j];
        }
        x[i] = s / a[at(i, i)];
    }
    Ok(x)
}

/// Dense Gaussian elimination with partial pivoting solving `A x = -b`; the reference
/// the banded solver is checked against.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut r: Vec<f64> = b.iter().map(|v| -v).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c] == 0.0 {
            return None;
        }
        m.swap(c, p);
        r.swap(c, p);
        for i in c + 1..n {
            let f = m[i][c] / m[c][c];
            if f == 0.0 {
                continue;
            }
            for j in c..n {
                m[i][j] -= f * m[c][j];
            }
            r[i] -= f * r[c];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Some(x)
}

/// Random symmetric positive-definite banded system, `A = B B^T + delta I` with `B`
/// lower-triangular of bandwidth `ceil(k / 2)` scattered so the product fills the band.
pub fn random_spd_banded<R: rand::Rng>(rng: &mut R, n: usize, k: usize) -> BandedSystem {
    let mut sys = BandedSystem::new(n, k);
    let half = k / 2;
    // Lower-triangular factor with bandwidth `half`; B B^T has bandwidth 2 * half <= k.
    let mut b = vec![vec![0.0; half + 1]; n];
    for (i, row) in b.iter_mut().enumerate() {
        for (d, v) in row.iter_mut().enumerate() {
            if d <= i {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
    }
    for i in 0..n {
        for j in i.saturating_sub(2 * half)..=i {
            let mut s = 0.0;
            for t in j.saturating_sub(half)..=j {
                if i - t <= half {
                    s += b[i][i - t] * b[j][j - t];
                }
            }
            sys.set(i, j, s);
            sys.set(j, i, s);
        }
    }
    // Odd k: the outermost diagonal is filled with small values kept SPD by the shift.
    if k % 2 == 1 {
        for i in k..n {
            let v = rng.gen_range(-0.1..0.1);
            sys.set(i, i - k, v);
            sys.set(i - k, i, v);
        }
    }
    sys.add_diagonal(0.5 + 0.2 * k as f64);
    for v in &mut sys.rhs {
        *v = rng.gen_range(-1.0..1.0);
    }
    sys
}
