//! Zero-chain losses: functions whose gradient can activate at most one new
//! coordinate per evaluation, plus the split variant whose even/odd links are
//! assigned to two distant node blocks.
//!
//! Building blocks:
//!
//! ```text
//! Psi(z) = 0                     for z <= 1/2,
//!          exp(1 - 1/(2z-1)^2)   for z >  1/2,
//! Phi(z) = sqrt(e) * integral_{-inf}^{z} exp(-t^2/2) dt.
//! ```
//!
//! The chain loss on `d` coordinates is
//!
//! ```text
//! l(x) = -Psi(1) Phi(x_1)
//!        + sum_{j=1}^{d-1} [ Psi(-x_j) Phi(-x_{j+1}) - Psi(x_j) Phi(x_{j+1}) ]
//! ```
//!
//! with range bound `Delta0 = 12` per coordinate, smoothness `L0 = 152`,
//! gradient sup-norm `G0 = 23`, and `||grad l(x)||_inf >= 1` whenever the
//! last coordinate is still zero.

use ndarray::{Array1, ArrayView1};

use super::{split_blocks, Problem, ProblemError, Result};

/// Per-coordinate range constant of the chain loss.
pub const DELTA0: f64 = 12.0;
/// Smoothness constant of the chain loss.
pub const L0: f64 = 152.0;
/// Gradient sup-norm bound of the chain loss.
pub const G0: f64 = 23.0;

/// Smooth bump switch: zero up to 1/2, rising to `e` past it.
pub fn psi(z: f64) -> f64 {
    if z <= 0.5 {
        0.0
    } else {
        let w = 2.0 * z - 1.0;
        (1.0 - 1.0 / (w * w)).exp()
    }
}

pub fn psi_prime(z: f64) -> f64 {
    if z <= 0.5 {
        0.0
    } else {
        let w = 2.0 * z - 1.0;
        psi(z) * 4.0 / (w * w * w)
    }
}

// Rational erf approximation, absolute error below 1.5e-7.
fn erf(x: f64) -> f64 {
    const P: f64 = 0.327_591_1;
    const A: [f64; 5] = [
        0.254_829_592,
        -0.284_496_736,
        1.421_413_741,
        -1.453_152_027,
        1.061_405_429,
    ];
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + P * x);
    let poly = ((((A[4] * t + A[3]) * t + A[2]) * t + A[1]) * t + A[0]) * t;
    sign * (1.0 - poly * (-x * x).exp())
}

/// Scaled Gaussian integral `sqrt(e) * integral_{-inf}^{z} e^{-t^2/2} dt`,
/// evaluated through the erf approximation.
pub fn phi(z: f64) -> f64 {
    let sqrt_2pie = (2.0 * std::f64::consts::PI * std::f64::consts::E).sqrt();
    sqrt_2pie * 0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

pub fn phi_prime(z: f64) -> f64 {
    std::f64::consts::E.sqrt() * (-0.5 * z * z).exp()
}

// One chain link between scaled coordinates a = x_t and b = x_{t+1}.
fn link(a: f64, b: f64) -> f64 {
    psi(-a) * phi(-b) - psi(a) * phi(b)
}

fn link_da(a: f64, b: f64) -> f64 {
    -psi_prime(-a) * phi(-b) - psi_prime(a) * phi(b)
}

fn link_db(a: f64, b: f64) -> f64 {
    -psi(-a) * phi_prime(-b) - psi(a) * phi_prime(b)
}

/// The chain loss on `d >= 2` coordinates.
#[derive(Clone, Copy, Debug)]
pub struct ZeroChainLoss {
    d: usize,
}

/// Chain loss component: value and exact gradient.
pub fn zero_chain_loss(d: usize) -> Result<ZeroChainLoss> {
    if d < 2 {
        return Err(ProblemError::DimensionTooSmall { d, min: 2 });
    }
    Ok(ZeroChainLoss { d })
}

impl ZeroChainLoss {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn value(&self, x: ArrayView1<'_, f64>) -> f64 {
        assert_eq!(x.len(), self.d);
        let mut v = -psi(1.0) * phi(x[0]);
        for t in 0..self.d - 1 {
            v += link(x[t], x[t + 1]);
        }
        v
    }

    pub fn grad(&self, x: ArrayView1<'_, f64>, out: &mut Array1<f64>) {
        assert_eq!(x.len(), self.d);
        assert_eq!(out.len(), self.d);
        out.fill(0.0);
        out[0] = -psi(1.0) * phi_prime(x[0]);
        for t in 0..self.d - 1 {
            out[t] += link_da(x[t], x[t + 1]);
            out[t + 1] += link_db(x[t], x[t + 1]);
        }
    }
}

/// The split chain: even links (plus the head term) on block `E1`, odd links
/// on block `E2`, zero loss elsewhere, scaled so every local loss is
/// `L`-smooth. The average loss equals `L lambda^2 / (3 L0) * l(x / lambda)`.
///
/// A node's gradient can activate coordinate `prog(x) + 1` only when the
/// parity of `prog(x)` matches its block, so raising `prog` requires routing
/// information between the two blocks through the gossip graph.
#[derive(Clone, Debug)]
pub struct SplitZeroChain {
    n: usize,
    d: usize,
    l: f64,
    lambda: f64,
    prefactor: f64, // n / ceil(n/3)
    e1: Vec<usize>,
    e2: Vec<usize>,
}

/// Split chain over `n >= 3` nodes and `d >= 2` coordinates.
pub fn split_zero_chain_problem(n: usize, d: usize, l: f64, lambda: f64) -> Result<SplitZeroChain> {
    if n < 3 {
        return Err(ProblemError::TooFewNodes { n, min: 3 });
    }
    if d < 2 {
        return Err(ProblemError::DimensionTooSmall { d, min: 2 });
    }
    if l <= 0.0 {
        return Err(ProblemError::NonPositive {
            name: "L",
            value: l,
        });
    }
    if lambda <= 0.0 {
        return Err(ProblemError::NonPositive {
            name: "lambda",
            value: lambda,
        });
    }
    let (e1, e2) = split_blocks(n);
    Ok(SplitZeroChain {
        n,
        d,
        l,
        lambda,
        prefactor: n as f64 / n.div_ceil(3) as f64,
        e1,
        e2,
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Head, // E1: head term + even 1-based links
    Tail, // E2: odd 1-based links
    Idle,
}

impl SplitZeroChain {
    pub fn blocks(&self) -> (&[usize], &[usize]) {
        (&self.e1, &self.e2)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn role(&self, node: usize) -> Role {
        if self.e1.contains(&node) {
            Role::Head
        } else if self.e2.contains(&node) {
            Role::Tail
        } else {
            Role::Idle
        }
    }

    // 1-based link j couples x_j and x_{j+1}; stored 0-based as t = j - 1.
    // Even 1-based links belong to the head block, odd ones to the tail.
    fn link_in_role(t: usize, role: Role) -> bool {
        let j_even = t % 2 == 1;
        match role {
            Role::Head => j_even,
            Role::Tail => !j_even,
            Role::Idle => false,
        }
    }

    /// Unscaled block loss `l_1` or `l_2` at scaled coordinates `y = x / lambda`.
    fn block_value(&self, role: Role, y: &Array1<f64>) -> f64 {
        let mut v = 0.0;
        if role == Role::Head {
            v -= self.prefactor * psi(1.0) * phi(y[0]);
        }
        for t in 0..self.d - 1 {
            if Self::link_in_role(t, role) {
                v += self.prefactor * link(y[t], y[t + 1]);
            }
        }
        v
    }

    fn block_grad(&self, role: Role, y: &Array1<f64>, out: &mut Array1<f64>) {
        out.fill(0.0);
        if role == Role::Idle {
            return;
        }
        if role == Role::Head {
            out[0] = -self.prefactor * psi(1.0) * phi_prime(y[0]);
        }
        for t in 0..self.d - 1 {
            if Self::link_in_role(t, role) {
                out[t] += self.prefactor * link_da(y[t], y[t + 1]);
                out[t + 1] += self.prefactor * link_db(y[t], y[t + 1]);
            }
        }
    }
}

impl Problem for SplitZeroChain {
    fn n(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn local_loss(&self, node: usize, x: ArrayView1<'_, f64>) -> f64 {
        let role = self.role(node);
        if role == Role::Idle {
            return 0.0;
        }
        let y = x.mapv(|v| v / self.lambda);
        let scale = self.l * self.lambda * self.lambda / (3.0 * L0);
        scale * self.block_value(role, &y)
    }

    fn local_grad(&self, node: usize, x: ArrayView1<'_, f64>, out: &mut Array1<f64>) {
        let role = self.role(node);
        if role == Role::Idle {
            out.fill(0.0);
            return;
        }
        let y = x.mapv(|v| v / self.lambda);
        self.block_grad(role, &y, out);
        let scale = self.l * self.lambda / (3.0 * L0);
        out.mapv_inplace(|v| v * scale);
    }

    fn smoothness(&self) -> f64 {
        self.l
    }

    fn grad_inf_bound(&self) -> Option<f64> {
        Some(self.l * self.lambda * G0 / L0)
    }

    fn tracks_prog(&self) -> bool {
        true
    }

    fn active_blocks(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        Some((self.e1.clone(), self.e2.clone()))
    }

    fn descriptor(&self) -> String {
        format!(
            "split_zero_chain n={} d={} L={} lambda={}",
            self.n, self.d, self.l, self.lambda
        )
    }
}
