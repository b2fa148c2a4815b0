//! Accelerated gossip averaging and the gossip-round schedules.
//!
//! One communication round applies the weight matrix once. The accelerated
//! variant keeps two registers and mixes them with a momentum coefficient
//! `eta`:
//!
//! ```text
//! z^(r+1) = (1 + eta) W z^(r) - eta z^(r-1),    z^(0) = z^(-1) = input.
//! ```
//!
//! The same recursion applied to matrices starting from the identity yields
//! the mixing polynomial `M^(R)`, so `R` rounds on data equal one
//! multiplication by `M^(R)`. Both row and column sums of every `M^(r)` stay
//! at one because the combination `(1 + eta) - eta` is affine, which is what
//! preserves the network-wide mean each round.
//!
//! Two `eta` formulas are provided. `Standard` is the spectral choice
//! `(1 - sqrt(1 - beta^2)) / (1 + sqrt(1 - beta^2))`; `Alternate` replaces
//! the denominator's inner sign, `(1 - sqrt(1 - beta^2)) / (1 + sqrt(1 + beta^2))`.
//! A calibration sweep (`gossiplab gossip-check --variant both`) shows the
//! spectral choice contracts strictly faster at every tested `(beta, R)`,
//! so it is the default.

use ndarray::{Array2, ArrayView2};
use thiserror::Error;

use crate::topology::WeightMatrix;

#[derive(Debug, Error)]
pub enum GossipError {
    #[error("input has {got} rows, weight matrix is {want}x{want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("momentum coefficient eta={eta} outside [0, 1)")]
    EtaOutOfRange { eta: f64 },
    #[error("gossip plans need at least one round")]
    NoRounds,
    #[error("beta={beta} outside [0, 1)")]
    BetaOutOfRange { beta: f64 },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("need 0 < mu <= L, got mu={mu}, L={l}")]
    BadCurvature { mu: f64, l: f64 },
}

pub type Result<T> = std::result::Result<T, GossipError>;

/// Momentum formula selector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EtaVariant {
    /// `(1 - sqrt(1 - beta^2)) / (1 + sqrt(1 - beta^2))`
    #[default]
    Standard,
    /// `(1 - sqrt(1 - beta^2)) / (1 + sqrt(1 + beta^2))`
    Alternate,
}

impl EtaVariant {
    pub fn eta(self, beta: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&beta) {
            return Err(GossipError::BetaOutOfRange { beta });
        }
        let root = (1.0 - beta * beta).sqrt();
        // 1 - sqrt(1 - b^2) written cancellation-free
        let numer = beta * beta / (1.0 + root);
        let denom = match self {
            EtaVariant::Standard => 1.0 + root,
            EtaVariant::Alternate => 1.0 + (1.0 + beta * beta).sqrt(),
        };
        Ok(numer / denom)
    }

    pub fn name(self) -> &'static str {
        match self {
            EtaVariant::Standard => "standard",
            EtaVariant::Alternate => "alternate",
        }
    }
}

/// A fixed number of accelerated gossip rounds over one weight matrix.
/// `eta` is derived from the measured connectivity of `w`, not from a
/// nominal target.
#[derive(Clone, Debug)]
pub struct GossipPlan {
    w: WeightMatrix,
    rounds: usize,
    eta: f64,
    variant: EtaVariant,
}

impl GossipPlan {
    pub fn new(w: WeightMatrix, rounds: usize, variant: EtaVariant) -> Result<Self> {
        if rounds == 0 {
            return Err(GossipError::NoRounds);
        }
        let eta = variant.eta(w.beta())?;
        Ok(Self {
            w,
            rounds,
            eta,
            variant,
        })
    }

    /// Plan with an explicit momentum coefficient.
    pub fn with_eta(w: WeightMatrix, rounds: usize, eta: f64) -> Result<Self> {
        if rounds == 0 {
            return Err(GossipError::NoRounds);
        }
        if !(0.0..1.0).contains(&eta) {
            return Err(GossipError::EtaOutOfRange { eta });
        }
        Ok(Self {
            w,
            rounds,
            eta,
            variant: EtaVariant::Standard,
        })
    }

    pub fn weight_matrix(&self) -> &WeightMatrix {
        &self.w
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn variant(&self) -> EtaVariant {
        self.variant
    }

    pub fn apply(&self, phi: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        fast_gossip_average(phi, &self.w, self.eta, self.rounds)
    }
}

/// Runs `rounds` accelerated gossip rounds on the stacked rows of `phi`.
/// `rounds = 0` returns the input unchanged.
pub fn fast_gossip_average(
    phi: ArrayView2<'_, f64>,
    w: &WeightMatrix,
    eta: f64,
    rounds: usize,
) -> Result<Array2<f64>> {
    if phi.nrows() != w.n() {
        return Err(GossipError::DimensionMismatch {
            got: phi.nrows(),
            want: w.n(),
        });
    }
    if !(0.0..1.0).contains(&eta) {
        return Err(GossipError::EtaOutOfRange { eta });
    }
    let mut prev = phi.to_owned();
    let mut cur = phi.to_owned();
    for _ in 0..rounds {
        let mut next = w.entries().dot(&cur);
        next.zip_mut_with(&prev, |x, &p| *x = (1.0 + eta) * *x - eta * p);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Mixing polynomial `M^(R)` of the accelerated recursion, starting from
/// `M^(-1) = M^(0) = I`. Entries may be negative, but all row and column
/// sums stay at one.
pub fn mixing_polynomial(w: &WeightMatrix, eta: f64, rounds: usize) -> Array2<f64> {
    let n = w.n();
    let mut prev: Array2<f64> = Array2::eye(n);
    let mut cur: Array2<f64> = Array2::eye(n);
    for _ in 0..rounds {
        let mut next = w.entries().dot(&cur);
        next.zip_mut_with(&prev, |x, &p| *x = (1.0 + eta) * *x - eta * p);
        prev = cur;
        cur = next;
    }
    cur
}

/// Contraction proxy after `rounds` accelerated rounds:
/// `sqrt(2) * (1 - sqrt(1 - beta))^rounds`.
pub fn effective_beta(beta: f64, rounds: usize) -> f64 {
    // 1 - sqrt(1-beta) = beta / (1 + sqrt(1-beta)), stable for small beta
    let base = beta / (1.0 + (1.0 - beta).sqrt());
    std::f64::consts::SQRT_2 * base.powi(rounds as i32)
}

/// Gossip rounds per outer step in the general smooth regime:
/// `ceil( max{ln 2, (1/2) ln(n * max{1, b^2 / (sigma^2 sqrt(1-beta))})} / sqrt(1-beta) )`.
pub fn choose_r_nonconvex(n: usize, beta: f64, b_sq: f64, sigma_sq: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&beta) {
        return Err(GossipError::BetaOutOfRange { beta });
    }
    if sigma_sq <= 0.0 {
        return Err(GossipError::NonPositive {
            name: "sigma_sq",
            value: sigma_sq,
        });
    }
    if b_sq < 0.0 {
        return Err(GossipError::NonPositive {
            name: "b_sq",
            value: b_sq,
        });
    }
    let root = (1.0 - beta).sqrt();
    let hetero = (b_sq / (sigma_sq * root)).max(1.0);
    let numer = (2.0f64).ln().max(0.5 * (n as f64 * hetero).ln());
    Ok((numer / root).ceil().max(1.0) as usize)
}

/// Constants `c1 = 6L/mu + 24L^3/mu^2 + 4nL` and `c2 = 18L^2/mu + 12nL`
/// from the sharp-growth-regime round schedule.
pub fn pl_constants(n: usize, l: f64, mu: f64) -> (f64, f64) {
    let nf = n as f64;
    let c1 = 6.0 * l / mu + 24.0 * l.powi(3) / (mu * mu) + 4.0 * nf * l;
    let c2 = 18.0 * l * l / mu + 12.0 * nf * l;
    (c1, c2)
}

/// Gossip rounds per outer step under the PL condition:
/// `ceil( max{ln 2, ln(nL/mu), (1/2) ln((n/L) max{c1, c2 b^2/(sigma^2 sqrt(1-beta))})} / sqrt(1-beta) )`.
pub fn choose_r_pl(
    n: usize,
    beta: f64,
    b_sq: f64,
    sigma_sq: f64,
    l: f64,
    mu: f64,
) -> Result<usize> {
    if !(0.0..1.0).contains(&beta) {
        return Err(GossipError::BetaOutOfRange { beta });
    }
    if sigma_sq <= 0.0 {
        return Err(GossipError::NonPositive {
            name: "sigma_sq",
            value: sigma_sq,
        });
    }
    if b_sq < 0.0 {
        return Err(GossipError::NonPositive {
            name: "b_sq",
            value: b_sq,
        });
    }
    if !(mu > 0.0 && mu <= l) {
        return Err(GossipError::BadCurvature { mu, l });
    }
    let nf = n as f64;
    let root = (1.0 - beta).sqrt();
    let (c1, c2) = pl_constants(n, l, mu);
    let inner = c1.max(c2 * b_sq / (sigma_sq * root));
    let numer = (2.0f64)
        .ln()
        .max((nf * l / mu).ln())
        .max(0.5 * (nf / l * inner).ln());
    Ok((numer / root).ceil().max(1.0) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{connectivity_measure, construct_weight_matrix};
    use ndarray::Array2;
    use rand::Rng;
    use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

    fn random_phi(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| rng.gen_range(-2.0..2.0))
    }

    #[test]
    fn consensus_is_a_fixed_point() {
        let w = construct_weight_matrix(12, 0.9).unwrap();
        let row: Vec<f64> = vec![0.3, -1.4, 2.2];
        let phi = Array2::from_shape_fn((12, 3), |(_, j)| row[j]);
        for rounds in [1usize, 5, 17] {
            let plan = GossipPlan::new(w.clone(), rounds, EtaVariant::Standard).unwrap();
            let out = plan.apply(phi.view()).unwrap();
            for ((_, j), v) in out.indexed_iter() {
                assert!((v - row[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_rounds_is_identity() {
        let w = construct_weight_matrix(8, 0.5).unwrap();
        let phi = random_phi(8, 4, 3);
        let out = fast_gossip_average(phi.view(), &w, 0.2, 0).unwrap();
        assert_eq!(out, phi);
    }

    #[test]
    fn mixing_polynomial_base_cases() {
        let w = construct_weight_matrix(6, 0.4).unwrap();
        let eta = 0.3;
        let m0 = mixing_polynomial(&w, eta, 0);
        assert_eq!(m0, Array2::eye(6));

        let m1 = mixing_polynomial(&w, eta, 1);
        let expected = w.entries() * (1.0 + eta) - Array2::<f64>::eye(6) * eta;
        for (a, b) in m1.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn vector_recursion_matches_matrix_recursion() {
        for (n, beta, rounds) in [(8, 0.5, 3), (16, 0.9, 10), (20, 0.95, 25)] {
            let w = construct_weight_matrix(n, beta).unwrap();
            for variant in [EtaVariant::Standard, EtaVariant::Alternate] {
                let plan = GossipPlan::new(w.clone(), rounds, variant).unwrap();
                let phi = random_phi(n, 5, 7);
                let fast = plan.apply(phi.view()).unwrap();
                let m = mixing_polynomial(&w, plan.eta(), rounds);
                let direct = m.dot(&phi);
                let scale = phi.iter().map(|v| v * v).sum::<f64>().sqrt();
                for (a, b) in fast.iter().zip(direct.iter()) {
                    assert!((a - b).abs() < 1e-10 * scale.max(1.0));
                }
            }
        }
    }

    #[test]
    fn column_means_are_preserved_every_round() {
        let w = construct_weight_matrix(14, 0.95).unwrap();
        let plan = GossipPlan::new(w.clone(), 1, EtaVariant::Standard).unwrap();
        let mut z = random_phi(14, 6, 11);
        let want = z.mean_axis(ndarray::Axis(0)).unwrap();
        for _ in 0..30 {
            z = plan.apply(z.view()).unwrap();
            let got = z.mean_axis(ndarray::Axis(0)).unwrap();
            for (a, b) in got.iter().zip(want.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gossip_output_contracts_like_the_mixing_norm() {
        let w = construct_weight_matrix(20, 0.9).unwrap();
        let rounds = 10;
        let plan = GossipPlan::new(w.clone(), rounds, EtaVariant::Standard).unwrap();
        let phi = random_phi(20, 4, 19);
        let mean = phi.mean_axis(ndarray::Axis(0)).unwrap();
        let spread =
            (&phi - &mean.broadcast((20, 4)).unwrap()).iter().map(|v| v * v).sum::<f64>().sqrt();
        let out = plan.apply(phi.view()).unwrap();
        let out_spread =
            (&out - &mean.broadcast((20, 4)).unwrap()).iter().map(|v| v * v).sum::<f64>().sqrt();
        let m = mixing_polynomial(&w, plan.eta(), rounds);
        let norm = connectivity_measure(m.view()).unwrap();
        assert!(
            out_spread <= norm * spread * (1.0 + 1e-9),
            "spread {out_spread} vs bound {}",
            norm * spread
        );
    }

    #[test]
    fn mixing_rows_and_columns_stay_stochastic() {
        let w = construct_weight_matrix(16, 0.8).unwrap();
        let eta = EtaVariant::Standard.eta(w.beta()).unwrap();
        for rounds in [1usize, 7, 30] {
            let m = mixing_polynomial(&w, eta, rounds);
            for row in m.rows() {
                assert!((row.sum() - 1.0).abs() < 1e-12);
            }
            for col in m.columns() {
                assert!((col.sum() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn standard_variant_contracts_faster_than_alternate() {
        // the calibration behind the default choice
        for beta in [0.5, 0.8, 0.9, 0.95, 0.99] {
            let w = construct_weight_matrix(32, beta).unwrap();
            let eta_std = EtaVariant::Standard.eta(w.beta()).unwrap();
            let eta_alt = EtaVariant::Alternate.eta(w.beta()).unwrap();
            for rounds in [5usize, 15, 40] {
                let m_std = mixing_polynomial(&w, eta_std, rounds);
                let m_alt = mixing_polynomial(&w, eta_alt, rounds);
                let norm_std = connectivity_measure(m_std.view()).unwrap();
                let norm_alt = connectivity_measure(m_alt.view()).unwrap();
                // absolute slack: deep-contraction cells sit at the
                // measurement floor for both variants
                assert!(
                    norm_std <= norm_alt * (1.0 + 1e-9) + 1e-9,
                    "beta={beta} R={rounds}: standard {norm_std} vs alternate {norm_alt}"
                );
            }
        }
    }

    #[test]
    fn r_schedule_general_regime() {
        // hand-evaluated small case: max{ln 2, (1/2) ln 2} / 1 rounds up to 1
        assert_eq!(choose_r_nonconvex(2, 0.0, 0.0, 1.0).unwrap(), 1);

        // grows like 1/sqrt(1-beta) and always satisfies the contraction
        // consequence sqrt(2) (1 - sqrt(1-beta))^R <= 1/sqrt(2)
        for beta in [0.0, 0.3, 0.7, 0.9, 0.99, 0.999] {
            for b_sq in [0.0, 1.0, 25.0] {
                let r = choose_r_nonconvex(16, beta, b_sq, 1.0).unwrap();
                assert!(r >= 1);
                assert!(
                    effective_beta(beta, r) <= std::f64::consts::FRAC_1_SQRT_2 + 1e-12,
                    "beta={beta} b_sq={b_sq} R={r}"
                );
            }
        }
        let lo = choose_r_nonconvex(16, 0.9, 1.0, 1.0).unwrap();
        let hi = choose_r_nonconvex(16, 0.999, 1.0, 1.0).unwrap();
        assert!(hi > lo);
    }

    #[test]
    fn r_schedule_pl_regime() {
        // c1 = 6 + 24 + 8 = 38 at n=2, L=mu=1; R = ceil(0.5 ln 76) = 3
        let (c1, c2) = pl_constants(2, 1.0, 1.0);
        assert_eq!(c1, 38.0);
        assert_eq!(c2, 42.0);
        assert_eq!(choose_r_pl(2, 0.0, 0.0, 1.0, 1.0, 1.0).unwrap(), 3);

        // consequence: effective contraction below sqrt(2) mu / (n L)
        for beta in [0.0, 0.5, 0.9, 0.99] {
            for (l, mu) in [(1.0, 1.0), (1.0, 0.1), (5.0, 0.5)] {
                let n = 8;
                let r = choose_r_pl(n, beta, 1.0, 1.0, l, mu).unwrap();
                let cap = std::f64::consts::SQRT_2 * mu / (n as f64 * l);
                assert!(
                    effective_beta(beta, r) <= cap * (1.0 + 1e-12),
                    "beta={beta} L={l} mu={mu} R={r}"
                );
            }
        }
    }

    #[test]
    fn zero_beta_mixes_exactly_in_one_round() {
        assert_eq!(effective_beta(0.0, 1), 0.0);
        assert_eq!(effective_beta(0.0, 7), 0.0);
    }

    #[test]
    fn schedule_inputs_are_validated() {
        assert!(choose_r_nonconvex(4, 1.0, 0.0, 1.0).is_err());
        assert!(choose_r_nonconvex(4, 0.5, 0.0, 0.0).is_err());
        assert!(choose_r_pl(4, 0.5, 0.0, 1.0, 1.0, 2.0).is_err()); // mu > L
        assert!(choose_r_pl(4, 0.5, 0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn plan_validation() {
        let w = construct_weight_matrix(6, 0.2).unwrap();
        assert!(GossipPlan::new(w.clone(), 0, EtaVariant::Standard).is_err());
        assert!(GossipPlan::with_eta(w.clone(), 3, 1.0).is_err());
        let plan = GossipPlan::with_eta(w, 3, 0.0).unwrap();
        assert_eq!(plan.eta(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let w = construct_weight_matrix(6, 0.2).unwrap();
        let phi = Array2::<f64>::zeros((5, 2));
        assert!(matches!(
            fast_gossip_average(phi.view(), &w, 0.1, 2),
            Err(GossipError::DimensionMismatch { .. })
        ));
    }
}
