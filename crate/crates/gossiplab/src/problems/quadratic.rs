//! Quadratic problem families: the two-point PL pair used for
//! indistinguishability arguments, and a heterogeneous quadratic suite for
//! convergence sweeps.

use ndarray::{Array1, Array2, ArrayView1};
use rand_chacha::rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use super::{Problem, ProblemError, Result};
use crate::rng::StreamRng;

/// Sign of the displaced coordinate in the PL pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlSign {
    Plus,
    Minus,
}

impl PlSign {
    fn value(self) -> f64 {
        match self {
            PlSign::Plus => 1.0,
            PlSign::Minus => -1.0,
        }
    }
}

/// `f(x) = (1/2) (mu (x_1 - v lambda)^2 + L sum_{j>=2} x_j^2)`, identical on
/// every node. Strongly convex, hence PL with constant `mu`; the minimizer is
/// `v lambda e_1` with value zero. The oracle adds isotropic Gaussian noise
/// with total variance `sigma_sq` (per-coordinate variance `sigma_sq / d`).
#[derive(Clone, Debug)]
pub struct PlQuadraticPair {
    n: usize,
    d: usize,
    l: f64,
    mu: f64,
    lambda: f64,
    v: f64,
    sigma_sq: f64,
}

pub fn pl_quadratic_pair(
    n: usize,
    d: usize,
    l: f64,
    mu: f64,
    lambda: f64,
    v: PlSign,
    sigma_sq: f64,
) -> Result<PlQuadraticPair> {
    if n == 0 {
        return Err(ProblemError::TooFewNodes { n, min: 1 });
    }
    if d < 2 {
        return Err(ProblemError::DimensionTooSmall { d, min: 2 });
    }
    if !(mu > 0.0 && mu <= l) {
        return Err(ProblemError::BadCurvature { mu, l });
    }
    if sigma_sq < 0.0 {
        return Err(ProblemError::Negative {
            name: "sigma_sq",
            value: sigma_sq,
        });
    }
    Ok(PlQuadraticPair {
        n,
        d,
        l,
        mu,
        lambda,
        v: v.value(),
        sigma_sq,
    })
}

impl PlQuadraticPair {
    pub fn sign(&self) -> f64 {
        self.v
    }
}

fn add_isotropic_noise(out: &mut Array1<f64>, sigma_sq: f64, rng: &mut StreamRng) {
    if sigma_sq == 0.0 {
        return;
    }
    let per_coord = (sigma_sq / out.len() as f64).sqrt();
    for v in out.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v += per_coord * z;
    }
}

impl Problem for PlQuadraticPair {
    fn n(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn local_loss(&self, _node: usize, x: ArrayView1<'_, f64>) -> f64 {
        let head = x[0] - self.v * self.lambda;
        let tail: f64 = x.iter().skip(1).map(|v| v * v).sum();
        0.5 * (self.mu * head * head + self.l * tail)
    }

    fn local_grad(&self, _node: usize, x: ArrayView1<'_, f64>, out: &mut Array1<f64>) {
        out[0] = self.mu * (x[0] - self.v * self.lambda);
        for j in 1..self.d {
            out[j] = self.l * x[j];
        }
    }

    fn sample_oracle(
        &self,
        node: usize,
        x: ArrayView1<'_, f64>,
        rng: &mut StreamRng,
        out: &mut Array1<f64>,
    ) {
        self.local_grad(node, x, out);
        add_isotropic_noise(out, self.sigma_sq, rng);
    }

    fn smoothness(&self) -> f64 {
        self.l
    }

    fn pl_constant(&self) -> Option<f64> {
        Some(self.mu)
    }

    fn f_star(&self) -> Option<f64> {
        Some(0.0)
    }

    fn x_star(&self) -> Option<Array1<f64>> {
        let mut x = Array1::zeros(self.d);
        x[0] = self.v * self.lambda;
        Some(x)
    }

    fn heterogeneity_sq(&self) -> Option<f64> {
        Some(0.0)
    }

    fn noise_sq(&self) -> Option<f64> {
        Some(self.sigma_sq)
    }

    fn descriptor(&self) -> String {
        format!(
            "pl_quadratic_pair n={} d={} L={} mu={} lambda={} v={} sigma_sq={}",
            self.n, self.d, self.l, self.mu, self.lambda, self.v, self.sigma_sq
        )
    }
}

/// Heterogeneous quadratics `f_i(x) = (1/2)(x - c_i)^T A (x - c_i)` with a
/// shared diagonal `A` whose spectrum spans `[mu, L]`. Offsets are centered
/// and rescaled so the gradient dissimilarity
/// `(1/n) sum_i ||grad f_i(x) - grad f(x)||^2 = (1/n) sum_i ||A c_i||^2`
/// (independent of `x` for a shared `A`) equals `b_sq` exactly.
#[derive(Clone, Debug)]
pub struct HeterogeneousQuadratic {
    n: usize,
    d: usize,
    l: f64,
    mu: f64,
    b_sq: f64,
    sigma_sq: f64,
    seed: u64,
    a_diag: Array1<f64>,
    offsets: Array2<f64>, // row i = c_i
    x_star: Array1<f64>,
    f_star: f64,
}

pub fn heterogeneous_quadratic_suite(
    n: usize,
    d: usize,
    l: f64,
    mu: f64,
    b_sq: f64,
    sigma_sq: f64,
    seed: u64,
) -> Result<HeterogeneousQuadratic> {
    if n == 0 {
        return Err(ProblemError::TooFewNodes { n, min: 1 });
    }
    if d < 2 {
        return Err(ProblemError::DimensionTooSmall { d, min: 2 });
    }
    if !(mu > 0.0 && mu <= l) {
        return Err(ProblemError::BadCurvature { mu, l });
    }
    if b_sq < 0.0 {
        return Err(ProblemError::Negative {
            name: "b_sq",
            value: b_sq,
        });
    }
    if sigma_sq < 0.0 {
        return Err(ProblemError::Negative {
            name: "sigma_sq",
            value: sigma_sq,
        });
    }
    if b_sq > 0.0 && n < 2 {
        return Err(ProblemError::InfeasibleHeterogeneity { b_sq, n });
    }

    let a_diag = Array1::from_iter(
        (0..d).map(|j| mu + (l - mu) * j as f64 / (d - 1) as f64),
    );

    let mut offsets = Array2::zeros((n, d));
    if b_sq > 0.0 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for v in offsets.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = z;
        }
        // center, then rescale so the dissimilarity lands exactly on b_sq
        let mean = offsets.mean_axis(ndarray::Axis(0)).unwrap();
        for mut row in offsets.rows_mut() {
            row -= &mean;
        }
        let raw: f64 = offsets
            .rows()
            .into_iter()
            .map(|c| c.iter().zip(&a_diag).map(|(ci, ai)| (ai * ci).powi(2)).sum::<f64>())
            .sum::<f64>()
            / n as f64;
        if raw <= 0.0 {
            return Err(ProblemError::InfeasibleHeterogeneity { b_sq, n });
        }
        let scale = (b_sq / raw).sqrt();
        offsets.mapv_inplace(|v| v * scale);
    }

    // minimizer of the average is the offset mean (zero after centering,
    // kept numerically exact by evaluating at the actual mean)
    let x_star = offsets.mean_axis(ndarray::Axis(0)).unwrap();
    let problem = HeterogeneousQuadratic {
        n,
        d,
        l,
        mu,
        b_sq,
        sigma_sq,
        seed,
        a_diag,
        offsets,
        x_star: x_star.clone(),
        f_star: 0.0,
    };
    let f_star = problem.mean_loss(x_star.view());
    Ok(HeterogeneousQuadratic { f_star, ..problem })
}

impl HeterogeneousQuadratic {
    pub fn spectrum(&self) -> &Array1<f64> {
        &self.a_diag
    }

    /// Measured gradient dissimilarity at `x` (constant in `x`).
    pub fn dissimilarity_at(&self, x: ArrayView1<'_, f64>) -> f64 {
        let mut mean = Array1::zeros(self.d);
        self.mean_grad(x, &mut mean);
        let mut g = Array1::zeros(self.d);
        let mut acc = 0.0;
        for i in 0..self.n {
            self.local_grad(i, x, &mut g);
            acc += (&g - &mean).iter().map(|v| v * v).sum::<f64>();
        }
        acc / self.n as f64
    }
}

impl Problem for HeterogeneousQuadratic {
    fn n(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn local_loss(&self, node: usize, x: ArrayView1<'_, f64>) -> f64 {
        let c = self.offsets.row(node);
        x.iter()
            .zip(c)
            .zip(&self.a_diag)
            .map(|((xi, ci), ai)| 0.5 * ai * (xi - ci) * (xi - ci))
            .sum()
    }

    fn local_grad(&self, node: usize, x: ArrayView1<'_, f64>, out: &mut Array1<f64>) {
        let c = self.offsets.row(node);
        for j in 0..self.d {
            out[j] = self.a_diag[j] * (x[j] - c[j]);
        }
    }

    fn sample_oracle(
        &self,
        node: usize,
        x: ArrayView1<'_, f64>,
        rng: &mut StreamRng,
        out: &mut Array1<f64>,
    ) {
        self.local_grad(node, x, out);
        add_isotropic_noise(out, self.sigma_sq, rng);
    }

    fn smoothness(&self) -> f64 {
        self.l
    }

    fn pl_constant(&self) -> Option<f64> {
        Some(self.mu)
    }

    fn f_star(&self) -> Option<f64> {
        Some(self.f_star)
    }

    fn x_star(&self) -> Option<Array1<f64>> {
        Some(self.x_star.clone())
    }

    fn heterogeneity_sq(&self) -> Option<f64> {
        Some(self.b_sq)
    }

    fn noise_sq(&self) -> Option<f64> {
        Some(self.sigma_sq)
    }

    fn descriptor(&self) -> String {
        format!(
            "heterogeneous_quadratic n={} d={} L={} mu={} b_sq={} sigma_sq={} seed={}",
            self.n, self.d, self.l, self.mu, self.b_sq, self.sigma_sq, self.seed
        )
    }
}
