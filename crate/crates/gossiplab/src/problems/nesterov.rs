//! Split tridiagonal quadratic with a closed-form geometric minimizer.
//!
//! The average loss is
//!
//! ```text
//! f(x) = (mu/2) ||x||^2 + ((L - mu)/12) (x^T M x - 2 lambda x_1)
//! ```
//!
//! with `M` the tridiagonal second-difference matrix. Stationarity reduces to
//! the three-term recurrence `-x_{j-1} + (2 + 6/(kappa-1)) x_j - x_{j+1} = 0`,
//! whose decaying solution is geometric: `x*_j = lambda q^j` with `q` the
//! smaller root of `q^2 - (2 + 6/(kappa-1)) q + 1 = 0`, i.e.
//! `q = 1 - 6 / (sqrt(3 + 6 kappa) + 3)`, `kappa = L/mu`.
//!
//! Choosing `lambda = sqrt(12 delta / ((L - mu) q))` puts the initial gap
//! `f(0) - f*` exactly at `delta`, since `f* = -(L - mu) lambda^2 q / 12`.
//!
//! The even-link terms live on block `E1`, the odd-link terms on `E2`, so the
//! same block-alternation that gates the chain losses applies here. The
//! oracle is exact; the instance is deterministic.
//!
//! The infinite-dimensional sequence space is truncated at `d` coordinates
//! chosen so the dropped tail `lambda q^d` is below 1e-14; the optimality
//! residual of the truncated system inherits that scale.

use ndarray::{Array1, ArrayView1};

use super::{split_blocks, Problem, ProblemError, Result};

const TAIL_TOLERANCE: f64 = 1e-14;
const TRUNCATION_CAP: usize = 10_000;

/// Geometric decay ratio `q` for a given curvature pair; rejects `L == mu`,
/// where `q = 0` degenerates the instance.
pub fn decay_ratio(l: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < l) {
        return Err(ProblemError::DegenerateCondition { mu, l });
    }
    let kappa = l / mu;
    Ok(1.0 - 6.0 / ((3.0 + 6.0 * kappa).sqrt() + 3.0))
}

/// Smallest truncation dimension with `lambda q^d < 1e-14`, capped at 1e4.
pub fn truncation_dim(l: f64, mu: f64, delta: f64) -> Result<usize> {
    if delta <= 0.0 {
        return Err(ProblemError::NonPositive {
            name: "delta",
            value: delta,
        });
    }
    let q = decay_ratio(l, mu)?;
    let lambda = (12.0 * delta / ((l - mu) * q)).sqrt();
    let mut d = 2usize;
    let mut tail = lambda * q * q;
    while tail >= TAIL_TOLERANCE {
        d += 1;
        tail *= q;
        if d > TRUNCATION_CAP {
            return Err(ProblemError::TruncationAboveCap {
                needed: d,
                cap: TRUNCATION_CAP,
            });
        }
    }
    Ok(d)
}

/// The split tridiagonal instance on `n >= 3` nodes, truncated to `d_trunc`
/// coordinates.
#[derive(Clone, Debug)]
pub struct NesterovSplitting {
    n: usize,
    d: usize,
    l: f64,
    mu: f64,
    delta: f64,
    lambda: f64,
    q: f64,
    prefactor: f64, // n / ceil(n/3)
    e1: Vec<usize>,
    e2: Vec<usize>,
}

pub fn nesterov_splitting_problem(
    n: usize,
    d_trunc: usize,
    l: f64,
    mu: f64,
    delta: f64,
) -> Result<NesterovSplitting> {
    if n < 3 {
        return Err(ProblemError::TooFewNodes { n, min: 3 });
    }
    if d_trunc < 2 {
        return Err(ProblemError::DimensionTooSmall { d: d_trunc, min: 2 });
    }
    if delta <= 0.0 {
        return Err(ProblemError::NonPositive {
            name: "delta",
            value: delta,
        });
    }
    let q = decay_ratio(l, mu)?;
    let lambda = (12.0 * delta / ((l - mu) * q)).sqrt();
    let tail = lambda * q.powi(d_trunc as i32);
    if tail >= TAIL_TOLERANCE {
        return Err(ProblemError::TruncationTooShort { d: d_trunc, tail });
    }
    let (e1, e2) = split_blocks(n);
    Ok(NesterovSplitting {
        n,
        d: d_trunc,
        l,
        mu,
        delta,
        lambda,
        q,
        prefactor: n as f64 / n.div_ceil(3) as f64,
        e1,
        e2,
    })
}

impl NesterovSplitting {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn decay(&self) -> f64 {
        self.q
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn blocks(&self) -> (&[usize], &[usize]) {
        (&self.e1, &self.e2)
    }

    /// Sup-norm residual of the truncated stationarity system at `x`:
    /// `|| ((L-mu)/6 M + mu I) x - lambda (L-mu)/6 e_1 ||_inf`.
    pub fn optimality_residual(&self, x: ArrayView1<'_, f64>) -> f64 {
        let c = (self.l - self.mu) / 6.0;
        let mut worst = 0.0f64;
        for j in 0..self.d {
            let left = if j > 0 { x[j - 1] } else { 0.0 };
            let right = if j + 1 < self.d { x[j + 1] } else { 0.0 };
            let mj = 2.0 * x[j] - left - right;
            let rhs = if j == 0 { self.lambda * c } else { 0.0 };
            let res = c * mj + self.mu * x[j] - rhs;
            worst = worst.max(res.abs());
        }
        worst
    }

    // Block-local coupling terms at x, without the mu/2 ||x||^2 ridge.
    fn coupling_value(&self, node: usize, x: ArrayView1<'_, f64>) -> f64 {
        let scale = (self.l - self.mu) / 12.0 * self.prefactor;
        if self.e1.contains(&node) {
            // head coordinate, even 1-based links (x_{2r} - x_{2r+1})^2,
            // plus the virtual-zero cap when the trailing link is even
            let mut v = x[0] * x[0] - 2.0 * self.lambda * x[0];
            let mut j = 1; // 0-based left index of an even 1-based link
            while j + 1 < self.d {
                let diff = x[j] - x[j + 1];
                v += diff * diff;
                j += 2;
            }
            if self.d.is_multiple_of(2) {
                v += x[self.d - 1] * x[self.d - 1];
            }
            scale * v
        } else if self.e2.contains(&node) {
            let mut v = 0.0;
            let mut j = 0; // 0-based left index of an odd 1-based link
            while j + 1 < self.d {
                let diff = x[j] - x[j + 1];
                v += diff * diff;
                j += 2;
            }
            if self.d % 2 == 1 {
                v += x[self.d - 1] * x[self.d - 1];
            }
            scale * v
        } else {
            0.0
        }
    }

    fn coupling_grad(&self, node: usize, x: ArrayView1<'_, f64>, out: &mut Array1<f64>) {
        let scale = (self.l - self.mu) / 12.0 * self.prefactor;
        if self.e1.contains(&node) {
            out[0] += scale * (2.0 * x[0] - 2.0 * self.lambda);
            let mut j = 1;
            while j + 1 < self.d {
                let diff = x[j] - x[j + 1];
                out[j] += scale * 2.0 * diff;
                out[j + 1] -= scale * 2.0 * diff;
                j += 2;
            }
            if self.d.is_multiple_of(2) {
                out[self.d - 1] += scale * 2.0 * x[self.d - 1];
            }
        } else if self.e2.contains(&node) {
            let mut j = 0;
            while j + 1 < self.d {
                let diff = x[j] - x[j + 1];
                out[j] += scale * 2.0 * diff;
                out[j + 1] -= scale * 2.0 * diff;
                j += 2;
            }
            if self.d % 2 == 1 {
                out[self.d - 1] += scale * 2.0 * x[self.d - 1];
            }
        }
    }
}

impl Problem for NesterovSplitting {
    fn n(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn local_loss(&self, node: usize, x: ArrayView1<'_, f64>) -> f64 {
        let ridge: f64 = 0.5 * self.mu * x.iter().map(|v| v * v).sum::<f64>();
        ridge + self.coupling_value(node, x)
    }

    fn local_grad(&self, node: usize, x: ArrayView1<'_, f64>, out: &mut Array1<f64>) {
        for (o, xi) in out.iter_mut().zip(x) {
            *o = self.mu * xi;
        }
        self.coupling_grad(node, x, out);
    }

    fn smoothness(&self) -> f64 {
        self.l
    }

    fn pl_constant(&self) -> Option<f64> {
        Some(self.mu)
    }

    fn f_star(&self) -> Option<f64> {
        Some(-(self.l - self.mu) * self.lambda * self.lambda * self.q / 12.0)
    }

    fn x_star(&self) -> Option<Array1<f64>> {
        Some(Array1::from_iter(
            (1..=self.d).map(|j| self.lambda * self.q.powi(j as i32)),
        ))
    }

    fn tracks_prog(&self) -> bool {
        true
    }

    fn active_blocks(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        Some((self.e1.clone(), self.e2.clone()))
    }

    fn descriptor(&self) -> String {
        format!(
            "nesterov_splitting n={} d={} L={} mu={} delta={}",
            self.n, self.d, self.l, self.mu, self.delta
        )
    }
}
