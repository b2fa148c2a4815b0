//! Synthetic problem suites with exact gradients and stochastic oracles.
//!
//! A problem bundles `n` local losses over a shared variable of dimension
//! `d`, together with whatever structure is known in closed form: the
//! smoothness constant, a PL constant, the optimum, a heterogeneity bound,
//! and the oracle's noise level. Oracles draw from an explicit per-query
//! stream so runs are reproducible under any evaluation order.

mod nesterov;
mod quadratic;
mod zero_chain;

use ndarray::{Array1, Array2, ArrayView1};
use thiserror::Error;

use crate::rng::StreamRng;

pub use nesterov::{decay_ratio, nesterov_splitting_problem, truncation_dim, NesterovSplitting};
pub use quadratic::{
    heterogeneous_quadratic_suite, pl_quadratic_pair, HeterogeneousQuadratic, PlQuadraticPair,
    PlSign,
};
pub use zero_chain::{
    phi, phi_prime, psi, psi_prime, split_zero_chain_problem, zero_chain_loss, SplitZeroChain,
    ZeroChainLoss, DELTA0, G0, L0,
};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("dimension d={d} too small, need at least {min}")]
    DimensionTooSmall { d: usize, min: usize },
    #[error("need at least {min} nodes, got {n}")]
    TooFewNodes { n: usize, min: usize },
    #[error("need 0 < mu <= L, got mu={mu}, L={l}")]
    BadCurvature { mu: f64, l: f64 },
    #[error("need L > mu strictly, got mu={mu}, L={l} (the instance degenerates)")]
    DegenerateCondition { mu: f64, l: f64 },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be nonnegative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("oracle probability p={p} outside (0, 1]")]
    BadProbability { p: f64 },
    #[error("heterogeneity b_sq={b_sq} infeasible for n={n}")]
    InfeasibleHeterogeneity { b_sq: f64, n: usize },
    #[error("truncation dimension {d} leaves tail {tail:e} above 1e-14")]
    TruncationTooShort { d: usize, tail: f64 },
    #[error("geometric tail needs {needed} coordinates, above the cap {cap}")]
    TruncationAboveCap { needed: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, ProblemError>;

/// A bundle of `n` local losses with exact gradients and a stochastic
/// oracle. Implementations are immutable; oracles take the RNG stream
/// handle explicitly.
pub trait Problem: Send + Sync {
    fn n(&self) -> usize;
    fn dim(&self) -> usize;

    fn local_loss(&self, node: usize, x: ArrayView1<'_, f64>) -> f64;
    fn local_grad(&self, node: usize, x: ArrayView1<'_, f64>, out: &mut Array1<f64>);

    /// One stochastic gradient sample at `x` for `node`. Defaults to the
    /// exact gradient (a noiseless oracle).
    fn sample_oracle(
        &self,
        node: usize,
        x: ArrayView1<'_, f64>,
        _rng: &mut StreamRng,
        out: &mut Array1<f64>,
    ) {
        self.local_grad(node, x, out);
    }

    /// Smoothness constant of every local loss.
    fn smoothness(&self) -> f64;

    /// PL constant of the average loss, when known.
    fn pl_constant(&self) -> Option<f64> {
        None
    }

    fn f_star(&self) -> Option<f64> {
        None
    }

    fn x_star(&self) -> Option<Array1<f64>> {
        None
    }

    /// Bound on `(1/n) sum_i ||grad f_i(x) - grad f(x)||^2`, when known.
    fn heterogeneity_sq(&self) -> Option<f64> {
        None
    }

    /// Bound on `E||oracle - grad||^2`, when known.
    fn noise_sq(&self) -> Option<f64> {
        None
    }

    /// Bound on `sup_x ||grad f_i(x)||_inf`, when known.
    fn grad_inf_bound(&self) -> Option<f64> {
        None
    }

    /// Whether runs should record the largest active coordinate.
    fn tracks_prog(&self) -> bool {
        false
    }

    /// The two node blocks whose alternation gates coordinate activation,
    /// for families that have them.
    fn active_blocks(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        None
    }

    /// One-line description for run manifests.
    fn descriptor(&self) -> String;

    /// Average loss at `x`.
    fn mean_loss(&self, x: ArrayView1<'_, f64>) -> f64 {
        (0..self.n()).map(|i| self.local_loss(i, x)).sum::<f64>() / self.n() as f64
    }

    /// Exact gradient of the average loss at `x`.
    fn mean_grad(&self, x: ArrayView1<'_, f64>, out: &mut Array1<f64>) {
        let mut tmp = Array1::zeros(self.dim());
        out.fill(0.0);
        for i in 0..self.n() {
            self.local_grad(i, x, &mut tmp);
            *out += &tmp;
        }
        *out /= self.n() as f64;
    }
}

/// Index of the last nonzero coordinate (1-based), 0 for the zero vector.
/// Exact-zero comparison; the constructions here produce exact zeros.
pub fn prog(x: ArrayView1<'_, f64>) -> usize {
    prog_with_threshold(x, 0.0)
}

/// `prog` with a magnitude threshold for robustness studies.
pub fn prog_with_threshold(x: ArrayView1<'_, f64>, threshold: f64) -> usize {
    x.iter()
        .enumerate()
        .rev()
        .find(|(_, v)| v.abs() > threshold)
        .map(|(i, _)| i + 1)
        .unwrap_or(0)
}

/// Largest `prog` over the rows of an iterate matrix.
pub fn prog_over_rows(x: &Array2<f64>) -> usize {
    x.rows().into_iter().map(prog).max().unwrap_or(0)
}

/// Running-max activation record of one run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProgTrace {
    /// Running max of `prog` over all nodes and rounds, one entry per record.
    pub running_max: Vec<usize>,
    /// Graph distance between the two active blocks, when both are known.
    pub dist_blocks: Option<usize>,
}

impl ProgTrace {
    /// `prog <= floor(T / dist) + 1` at every record, given the per-record
    /// communication counts.
    pub fn respects_propagation_bound(&self, comm_rounds: &[usize]) -> bool {
        let Some(dist) = self.dist_blocks else {
            return true;
        };
        self.running_max
            .iter()
            .zip(comm_rounds)
            .all(|(&p, &t)| p <= t / dist + 1)
    }
}

/// Wraps a problem with the coordinate-blocking stochastic oracle: with
/// probability `1 - p` every coordinate past `prog(x)` is zeroed, otherwise
/// those coordinates are amplified by `1/p`. Unbiased; the blocked
/// coordinate's variance is `|g_{prog+1}|^2 (1-p)/p`.
pub struct BernoulliOracle<P> {
    inner: P,
    p: f64,
}

pub fn bernoulli_oracle<P: Problem>(inner: P, p: f64) -> Result<BernoulliOracle<P>> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(ProblemError::BadProbability { p });
    }
    Ok(BernoulliOracle { inner, p })
}

impl<P> BernoulliOracle<P> {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Problem> Problem for BernoulliOracle<P> {
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn local_loss(&self, node: usize, x: ArrayView1<'_, f64>) -> f64 {
        self.inner.local_loss(node, x)
    }

    fn local_grad(&self, node: usize, x: ArrayView1<'_, f64>, out: &mut Array1<f64>) {
        self.inner.local_grad(node, x, out);
    }

    fn sample_oracle(
        &self,
        node: usize,
        x: ArrayView1<'_, f64>,
        rng: &mut StreamRng,
        out: &mut Array1<f64>,
    ) {
        use rand::Rng;
        self.inner.local_grad(node, x, out);
        if self.p == 1.0 {
            return;
        }
        let cut = prog(x); // 0-based index of the first blockable coordinate
        let factor = if rng.gen_bool(self.p) { 1.0 / self.p } else { 0.0 };
        for j in cut..out.len() {
            out[j] *= factor;
        }
    }

    fn smoothness(&self) -> f64 {
        self.inner.smoothness()
    }

    fn pl_constant(&self) -> Option<f64> {
        self.inner.pl_constant()
    }

    fn f_star(&self) -> Option<f64> {
        self.inner.f_star()
    }

    fn x_star(&self) -> Option<Array1<f64>> {
        self.inner.x_star()
    }

    fn heterogeneity_sq(&self) -> Option<f64> {
        self.inner.heterogeneity_sq()
    }

    fn noise_sq(&self) -> Option<f64> {
        self.inner
            .grad_inf_bound()
            .map(|g| g * g * (1.0 - self.p) / self.p)
    }

    fn grad_inf_bound(&self) -> Option<f64> {
        self.inner.grad_inf_bound()
    }

    fn tracks_prog(&self) -> bool {
        self.inner.tracks_prog()
    }

    fn active_blocks(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        self.inner.active_blocks()
    }

    fn descriptor(&self) -> String {
        format!("{} | bernoulli_oracle p={}", self.inner.descriptor(), self.p)
    }
}

/// Node blocks `E1 = {1..ceil(n/3)}` and `E2 = {floor(n/2)+1 ..}` (1-based),
/// returned as 0-based indices.
pub(crate) fn split_blocks(n: usize) -> (Vec<usize>, Vec<usize>) {
    let len = n.div_ceil(3);
    let e1 = (0..len).collect();
    let start = n / 2;
    let e2 = (start..start + len).collect();
    (e1, e2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn prog_basics() {
        assert_eq!(prog(array![0.0, 0.0, 0.0].view()), 0);
        assert_eq!(prog(array![0.0, 3.2, 0.0, 0.0].view()), 2);
        assert_eq!(prog(array![1.0, 0.0, -0.5].view()), 3);
        assert_eq!(prog_with_threshold(array![1e-9, 0.0].view(), 1e-6), 0);
    }

    #[test]
    fn split_blocks_match_worked_example() {
        let (e1, e2) = split_blocks(10);
        assert_eq!(e1, vec![0, 1, 2, 3]);
        assert_eq!(e2, vec![5, 6, 7, 8]);
        let (e1, e2) = split_blocks(12);
        assert_eq!(e1, vec![0, 1, 2, 3]);
        assert_eq!(e2, vec![6, 7, 8, 9]);
    }

    #[test]
    fn blocking_oracle_with_unit_probability_is_exact() {
        use crate::rng::SeedPlan;
        use ndarray::Array1;
        let base = super::split_zero_chain_problem(6, 6, 456.0, 1.0).unwrap();
        let oracle = bernoulli_oracle(base, 1.0).unwrap();
        let plan = SeedPlan::new(9);
        let mut x = Array1::zeros(6);
        x[0] = 1.0;
        let mut exact = Array1::zeros(6);
        oracle.local_grad(0, x.view(), &mut exact);
        let mut g = Array1::zeros(6);
        for t in 0..50 {
            let mut rng = plan.stream(0, t, 1);
            oracle.sample_oracle(0, x.view(), &mut rng, &mut g);
            assert_eq!(g, exact);
        }
        assert!(bernoulli_oracle(super::split_zero_chain_problem(6, 6, 1.0, 1.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn blocking_oracle_leaves_settled_coordinates_alone() {
        use crate::rng::SeedPlan;
        use ndarray::Array1;
        let base = super::split_zero_chain_problem(6, 6, 456.0, 1.0).unwrap();
        let oracle = bernoulli_oracle(base, 0.4).unwrap();
        let plan = SeedPlan::new(11);
        let mut x = Array1::zeros(6);
        x[0] = -0.9;
        x[1] = 0.8; // prog(x) = 2
        let mut exact = Array1::zeros(6);
        oracle.local_grad(3, x.view(), &mut exact);
        let mut g = Array1::zeros(6);
        for t in 0..200 {
            let mut rng = plan.stream(3, t, 1);
            oracle.sample_oracle(3, x.view(), &mut rng, &mut g);
            assert_eq!(g[0], exact[0]);
            assert_eq!(g[1], exact[1]);
        }
    }

    #[test]
    fn propagation_bound_check() {
        let trace = ProgTrace {
            running_max: vec![0, 1, 1, 2],
            dist_blocks: Some(3),
        };
        assert!(trace.respects_propagation_bound(&[0, 1, 2, 3]));
        let bad = ProgTrace {
            running_max: vec![0, 2],
            dist_blocks: Some(3),
        };
        assert!(!bad.respects_propagation_bound(&[0, 1]));
    }
}
