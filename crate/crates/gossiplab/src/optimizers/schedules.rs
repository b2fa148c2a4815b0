//! Learning-rate schedules for the two regimes, in both the one-gossip and
//! multi-gossip parameterizations. The multi-gossip variants take the
//! effective quantities `sigma_tilde = sigma / sqrt(R)` and
//! `beta_tilde = sqrt(2) (1 - sqrt(1 - beta))^R` in place of the raw ones.

use super::{OptimError, Result};

/// Convergence regime a schedule targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    NonConvex,
    Pl,
}

/// Step size and gossip rounds for one run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub gamma: f64,
    pub rounds: usize,
    pub regime: Regime,
}

impl Schedule {
    pub fn new(gamma: f64, rounds: usize, regime: Regime) -> Result<Self> {
        if gamma <= 0.0 {
            return Err(OptimError::NonPositive {
                name: "gamma",
                value: gamma,
            });
        }
        if rounds == 0 {
            return Err(OptimError::ZeroRounds);
        }
        Ok(Self {
            gamma,
            rounds,
            regime,
        })
    }
}

fn check_common(n: usize, k_outer: usize, l: f64, delta: f64) -> Result<()> {
    if n == 0 {
        return Err(OptimError::NonPositive {
            name: "n",
            value: 0.0,
        });
    }
    if k_outer == 0 {
        return Err(OptimError::ZeroHorizon);
    }
    if l <= 0.0 {
        return Err(OptimError::NonPositive { name: "L", value: l });
    }
    if delta <= 0.0 {
        return Err(OptimError::NonPositive {
            name: "delta",
            value: delta,
        });
    }
    Ok(())
}

/// General-regime step size for one-gossip runs:
/// `min{ sqrt(2 n delta) / (sigma sqrt(L (K+1))), (1-beta)/(6 beta L), 1/(4L) }`.
/// At `beta = 0` the middle term is dropped (it is infinite).
pub fn lr_nonconvex_dsgd(
    n: usize,
    k_outer: usize,
    l: f64,
    beta: f64,
    sigma: f64,
    delta: f64,
) -> Result<f64> {
    check_common(n, k_outer, l, delta)?;
    if sigma <= 0.0 {
        return Err(OptimError::NonPositive {
            name: "sigma",
            value: sigma,
        });
    }
    if !(0.0..1.0).contains(&beta) {
        return Err(OptimError::BetaOutOfRange { beta });
    }
    let noise = (2.0 * n as f64 * delta).sqrt() / (sigma * (l * (k_outer as f64 + 1.0)).sqrt());
    let mixing = if beta == 0.0 {
        f64::INFINITY
    } else {
        (1.0 - beta) / (6.0 * beta * l)
    };
    Ok(noise.min(mixing).min(1.0 / (4.0 * l)))
}

/// Multi-gossip general-regime step size:
/// `min{ sqrt(delta n) / (sigma_tilde sqrt(L (K+1))), (1-beta_tilde)/(6 beta_tilde L), 1/(4L) }`.
pub fn lr_nonconvex_mg(
    n: usize,
    k_outer: usize,
    l: f64,
    beta_tilde: f64,
    sigma_tilde: f64,
    delta: f64,
) -> Result<f64> {
    check_common(n, k_outer, l, delta)?;
    if sigma_tilde <= 0.0 {
        return Err(OptimError::NonPositive {
            name: "sigma_tilde",
            value: sigma_tilde,
        });
    }
    if !(0.0..1.0).contains(&beta_tilde) {
        return Err(OptimError::BetaOutOfRange { beta: beta_tilde });
    }
    let noise = (delta * n as f64).sqrt() / (sigma_tilde * (l * (k_outer as f64 + 1.0)).sqrt());
    let mixing = if beta_tilde == 0.0 {
        f64::INFINITY
    } else {
        (1.0 - beta_tilde) / (6.0 * beta_tilde * l)
    };
    Ok(noise.min(mixing).min(1.0 / (4.0 * l)))
}

/// PL-regime step size for one-gossip runs:
/// `min{ (4/(mu K)) ln(delta mu^2 n K / (sigma^2 L)), (1-beta)/(4L), mu(1-beta)/(24 n beta L^2) }`.
///
/// When the logarithm is not positive the horizon is too short for the
/// schedule; that term is treated as infinite and a warning is logged.
pub fn lr_pl_dsgd(
    n: usize,
    k_outer: usize,
    l: f64,
    mu: f64,
    beta: f64,
    sigma: f64,
    delta: f64,
) -> Result<f64> {
    check_common(n, k_outer, l, delta)?;
    if !(mu > 0.0 && mu <= l) {
        return Err(OptimError::BadCurvature { mu, l });
    }
    if sigma < 0.0 {
        return Err(OptimError::NonPositive {
            name: "sigma",
            value: sigma,
        });
    }
    if !(0.0..1.0).contains(&beta) {
        return Err(OptimError::BetaOutOfRange { beta });
    }
    let kf = k_outer as f64;
    let nf = n as f64;
    let log_arg = delta * mu * mu * nf * kf / (sigma * sigma * l);
    let anneal = if log_arg > 1.0 {
        4.0 / (mu * kf) * log_arg.ln()
    } else {
        log::warn!(
            "PL schedule horizon too short: log argument {log_arg:.3e} <= 1, dropping the term"
        );
        f64::INFINITY
    };
    let mixing = (1.0 - beta) / (4.0 * l);
    let consensus = if beta == 0.0 {
        f64::INFINITY
    } else {
        mu * (1.0 - beta) / (24.0 * nf * beta * l * l)
    };
    let gamma = anneal.min(mixing).min(consensus);
    if !gamma.is_finite() {
        return Err(OptimError::ScheduleUndetermined);
    }
    Ok(gamma)
}

/// Multi-gossip PL-regime step size with the effective quantities substituted.
pub fn lr_pl_mg(
    n: usize,
    k_outer: usize,
    l: f64,
    mu: f64,
    beta_tilde: f64,
    sigma_tilde: f64,
    delta: f64,
) -> Result<f64> {
    lr_pl_dsgd(n, k_outer, l, mu, beta_tilde, sigma_tilde, delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonconvex_dsgd_hand_value() {
        // n=8, K=1000, L=1, beta=0.5, sigma=1, delta=1:
        // min{ sqrt(16/1001), 1/6, 1/4 } = sqrt(16/1001)
        let g = lr_nonconvex_dsgd(8, 1000, 1.0, 0.5, 1.0, 1.0).unwrap();
        assert!((g - (16.0f64 / 1001.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn nonconvex_beta_zero_drops_the_mixing_term() {
        let g = lr_nonconvex_dsgd(8, 10, 1.0, 0.0, 1.0, 1.0).unwrap();
        let noise = (16.0f64 / 11.0).sqrt();
        assert!((g - noise.min(0.25)).abs() < 1e-15);
    }

    #[test]
    fn nonconvex_scales_like_inverse_sqrt_horizon() {
        let gammas: Vec<f64> = [100usize, 10_000, 1_000_000]
            .iter()
            .map(|&k| lr_nonconvex_dsgd(8, k, 1.0, 0.1, 1.0, 1.0).unwrap())
            .collect();
        assert!(gammas[0] > gammas[1] && gammas[1] > gammas[2]);
        // the large-K tail is the noise term, prop to K^{-1/2}
        let ratio = gammas[1] / gammas[2];
        assert!((ratio - 10.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn pl_dsgd_hand_value() {
        // n=8, K=1e3, L=1, mu=0.1, beta=0.5, sigma=1, delta=1:
        // term1 = 0.04 ln 80, term2 = 0.125, term3 = 0.05/96
        let g = lr_pl_dsgd(8, 1000, 1.0, 0.1, 0.5, 1.0, 1.0).unwrap();
        assert!((g - 0.05 / 96.0).abs() < 1e-15);
    }

    #[test]
    fn pl_beta_zero_keeps_two_terms() {
        let g = lr_pl_dsgd(8, 1000, 1.0, 0.1, 0.0, 1.0, 1.0).unwrap();
        let term1 = 4.0 / (0.1 * 1000.0) * (80.0f64).ln();
        assert!((g - term1.min(0.25)).abs() < 1e-15);
    }

    #[test]
    fn pl_short_horizon_clamps_and_still_resolves() {
        // log argument below 1 drops term1; the remaining terms stay finite
        let g = lr_pl_dsgd(8, 1, 1.0, 0.1, 0.5, 10.0, 1e-6).unwrap();
        assert!((g - 0.05 / 96.0).abs() < 1e-15);
        let g = lr_pl_dsgd(8, 1, 1.0, 0.1, 0.0, 10.0, 1e-6).unwrap();
        assert!((g - 0.25).abs() < 1e-15);
    }

    #[test]
    fn mg_variants_accept_effective_quantities() {
        let g = lr_nonconvex_mg(8, 1000, 1.0, 0.0, 0.5, 1.0).unwrap();
        assert!(g > 0.0 && g <= 0.25);
        let g = lr_pl_mg(8, 1000, 1.0, 0.1, 0.0, 0.5, 1.0).unwrap();
        assert!(g > 0.0 && g <= 0.25);
    }

    #[test]
    fn schedule_validation() {
        assert!(Schedule::new(0.0, 1, Regime::NonConvex).is_err());
        assert!(Schedule::new(0.1, 0, Regime::NonConvex).is_err());
        assert!(lr_nonconvex_dsgd(8, 0, 1.0, 0.5, 1.0, 1.0).is_err());
        assert!(lr_nonconvex_dsgd(8, 10, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(lr_pl_dsgd(8, 10, 1.0, 2.0, 0.5, 1.0, 1.0).is_err());
    }
}
