//! Structural verification suite: every claim the library is built around,
//! checked end to end at fixed tolerances with independent oracles (dense
//! Jacobi eigensolver, BFS, finite differences, quadrature, Monte Carlo).
//!
//! Each criterion returns a report rather than asserting, so the CLI
//! (`gossiplab verify`) and the acceptance test target share one
//! implementation.

mod jacobi;

use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

pub use jacobi::symmetric_eigenvalues;

use crate::gossip::{
    choose_r_nonconvex, effective_beta, mixing_polynomial, EtaVariant, GossipPlan,
};
use crate::optimizers::{
    lr_nonconvex_dsgd, lr_nonconvex_mg, run, transient_iterations, Algorithm, Regime, RunSpec,
    Schedule, TransientEstimate,
};
use crate::problems::{
    bernoulli_oracle, heterogeneous_quadratic_suite, nesterov_splitting_problem, pl_quadratic_pair,
    prog, split_zero_chain_problem, truncation_dim, zero_chain_loss, PlSign, Problem, DELTA0, G0,
    L0,
};
use crate::rng::SeedPlan;
use crate::topology::{
    beta_max, bfs_diameter, bfs_distance, case1_cutoff, connectivity_measure,
    construct_weight_matrix, diameter, distance, laplacian_spectrum, lattice_weight_matrix,
    ring_lattice, Graph, WeightMatrix,
};

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub elapsed_s: f64,
    pub details: Vec<String>,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        let summary = self.details.first().map(String::as_str).unwrap_or("");
        format!(
            "criterion {:>2} {:<20} {} ({:.1}s) {}",
            self.id, self.name, status, self.elapsed_s, summary
        )
    }
}

struct ReportBuilder {
    id: usize,
    name: &'static str,
    pass: bool,
    details: Vec<String>,
    started: Instant,
}

impl ReportBuilder {
    fn new(id: usize, name: &'static str) -> Self {
        Self {
            id,
            name,
            pass: true,
            details: Vec::new(),
            started: Instant::now(),
        }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.pass = false;
            if self.details.len() < 40 {
                self.details.push(msg());
            }
        }
    }

    fn note(&mut self, msg: String) {
        self.details.push(msg);
    }

    fn finish(mut self) -> CriterionReport {
        let elapsed = self.started.elapsed().as_secs_f64();
        if self.pass && self.details.is_empty() {
            self.details.push("all checks passed".into());
        }
        CriterionReport {
            id: self.id,
            name: self.name,
            pass: self.pass,
            elapsed_s: elapsed,
            details: self.details,
        }
    }
}

fn laplacian_dense(g: &Graph) -> Array2<f64> {
    let n = g.n();
    let k = g.degree_count() as f64;
    let mut l = Array2::zeros((n, n));
    for i in 0..n {
        l[[i, i]] = k;
        for &j in g.neighbors(i) {
            l[[i, j]] = -1.0;
        }
    }
    l
}

/// Criterion 1: closed-form lattice spectra match the dense eigensolver for
/// all `n <= 64`, and the min-eigenvalue sandwich holds for all `n <= 200`.
pub fn criterion_1_spectrum() -> CriterionReport {
    let mut rep = ReportBuilder::new(1, "spectrum-oracle");
    for n in 4..=64usize {
        for k in (2..n - 1).step_by(2) {
            let spec = laplacian_spectrum(n, k).unwrap();
            let g = ring_lattice(n, k).unwrap();
            let dense = symmetric_eigenvalues(laplacian_dense(&g).view());
            let mut closed = spec.eigenvalues.clone();
            closed.sort_by(|a, b| a.total_cmp(b));
            for (c, d) in closed.iter().zip(dense.iter()) {
                rep.check((c - d).abs() <= 1e-9, || {
                    format!("spectrum mismatch at n={n} k={k}: {c} vs {d}")
                });
            }
        }
    }
    for n in 4..=200usize {
        for k in (2..n - 1).step_by(2) {
            let spec = laplacian_spectrum(n, k).unwrap();
            rep.check(spec.sandwich_holds(), || {
                format!(
                    "sandwich violated at n={n} k={k}: {} <= {} <= {}",
                    spec.lower_bound, spec.min_nonzero, spec.upper_bound
                )
            });
        }
    }
    rep.finish()
}

/// Criterion 2: formula distance and diameter equal BFS everywhere, `n <= 60`.
pub fn criterion_2_distance() -> CriterionReport {
    let mut rep = ReportBuilder::new(2, "distance-oracle");
    for n in 4..=60usize {
        for k in (2..n - 1).step_by(2) {
            let g = ring_lattice(n, k).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let formula = distance(&g, i, j).unwrap();
                    let bfs = bfs_distance(&g, i, j).unwrap();
                    rep.check(formula == bfs, || {
                        format!("distance mismatch n={n} k={k} ({i},{j}): {formula} vs {bfs}")
                    });
                }
            }
            rep.check(diameter(n, k).unwrap() == bfs_diameter(&g), || {
                format!("diameter mismatch at n={n} k={k}")
            });
        }
    }
    rep.finish()
}

/// Criterion 3: the two-case construction hits `beta` to 1e-8, stays doubly
/// stochastic to 1e-12 and PSD to -1e-10, and keeps `D sqrt(1-beta)` inside
/// `[0.3, 6.0]` on every lattice cell.
pub fn criterion_3_construction() -> CriterionReport {
    let mut rep = ReportBuilder::new(3, "weight-construction");
    let mut ratio_range: (f64, f64) = (f64::INFINITY, 0.0);
    for &n in &[20usize, 50, 100, 200] {
        for beta in construction_grid(n) {
            let w = match construct_weight_matrix(n, beta) {
                Ok(w) => w,
                Err(e) => {
                    rep.check(false, || format!("construction failed n={n} beta={beta}: {e}"));
                    continue;
                }
            };
            rep.check((w.beta() - beta).abs() <= 1e-8, || {
                format!("beta off target n={n}: want {beta}, measured {}", w.beta())
            });
            for (i, row) in w.entries().rows().into_iter().enumerate() {
                rep.check((row.sum() - 1.0).abs() <= 1e-12, || {
                    format!("row {i} sum {} at n={n} beta={beta}", row.sum())
                });
            }
            for (j, col) in w.entries().columns().into_iter().enumerate() {
                rep.check((col.sum() - 1.0).abs() <= 1e-12, || {
                    format!("col {j} sum {} at n={n} beta={beta}", col.sum())
                });
            }
            let eig = symmetric_eigenvalues(w.entries().view());
            rep.check(eig[0] >= -1e-10, || {
                format!("not PSD at n={n} beta={beta}: min eig {}", eig[0])
            });
            if !w.graph().is_complete() {
                let k = w.graph().degree_count();
                let d = diameter(n, k).unwrap() as f64;
                let ratio = d * (1.0 - beta).sqrt();
                ratio_range = (ratio_range.0.min(ratio), ratio_range.1.max(ratio));
                rep.check((0.3..=6.0).contains(&ratio), || {
                    format!("diameter ratio {ratio} outside [0.3, 6.0] at n={n} beta={beta} k={k}")
                });
            }
        }
    }
    rep.note(format!(
        "lattice-cell D*sqrt(1-beta) range [{:.3}, {:.3}]",
        ratio_range.0, ratio_range.1
    ));
    rep.finish()
}

fn construction_grid(n: usize) -> Vec<f64> {
    let cutoff = case1_cutoff(n);
    let top = beta_max(n);
    let mut grid = Vec::with_capacity(12);
    for i in 0..6 {
        grid.push(cutoff * (i as f64 / 5.0));
    }
    for i in 1..=6 {
        grid.push((cutoff + (top - cutoff) * (i as f64 / 6.0)).min(top));
    }
    grid
}

/// Criterion 4: contraction of the mixing polynomial against the
/// `sqrt(2) (1 - sqrt(1-beta))^R` envelope for `R = 1..50`, plus exact mean
/// preservation, at the calibrated (standard) momentum variant.
///
/// The envelope check fails on a mid-range band of `R` at every tested
/// `beta`: a constant-momentum two-register recursion provably cannot meet
/// that envelope at small `R` (at `beta = 0.5, R = 1` even the optimal
/// degree-1 polynomial sits at `beta > sqrt(2) (1 - sqrt(1-beta))`). The
/// report carries the measured envelope constant; the run itself is kept
/// faithful to the stated bound.
pub fn criterion_4_contraction() -> CriterionReport {
    let mut rep = ReportBuilder::new(4, "gossip-contraction");
    let n = 32;
    let mut violations = 0usize;
    let mut cells = 0usize;
    let mut worst_ratio = 0.0f64;
    let mut worst_cell = (0.0f64, 0usize);
    let mut envelope_const = 0.0f64;

    for &beta in &[0.5, 0.8, 0.9, 0.95, 0.99] {
        let w = construct_weight_matrix(n, beta).unwrap();
        let eta = EtaVariant::Standard.eta(w.beta()).unwrap();

        // mean preservation through 50 live rounds
        let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
        let phi = Array2::from_shape_fn((n, 3), |_| rng.gen_range(-1.0..1.0));
        let want = phi.mean_axis(ndarray::Axis(0)).unwrap();
        let mut z = phi.clone();
        let plan = GossipPlan::with_eta(w.clone(), 1, eta).unwrap();
        for r in 0..50 {
            z = plan.apply(z.view()).unwrap();
            let got = z.mean_axis(ndarray::Axis(0)).unwrap();
            for (a, b) in got.iter().zip(want.iter()) {
                rep.check((a - b).abs() <= 1e-12, || {
                    format!("mean drift {:e} at beta={beta} round {r}", (a - b).abs())
                });
            }
        }

        // norm envelope per R; cells where the envelope sits below the
        // double-precision measurement floor cannot be resolved either way
        // and are compared against the floor instead
        let floor = 10.0 * crate::topology::MEASUREMENT_FLOOR;
        let base = beta / (1.0 + (1.0 - beta).sqrt()); // 1 - sqrt(1-beta)
        for rounds in 1..=50usize {
            let m = mixing_polynomial(&w, eta, rounds);
            let norm = connectivity_measure(m.view()).unwrap();
            let bound = std::f64::consts::SQRT_2 * base.powi(rounds as i32);
            cells += 1;
            if norm > floor {
                envelope_const = envelope_const.max(norm / base.powi(rounds as i32));
            }
            if norm > bound.max(floor) * (1.0 + 1e-12) {
                violations += 1;
                let ratio = norm / bound;
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                    worst_cell = (beta, rounds);
                }
            }
        }
    }

    rep.check(violations == 0, || {
        format!(
            "norm exceeded sqrt(2)(1-sqrt(1-beta))^R on {violations}/{cells} cells; \
             worst ratio {worst_ratio:.3} at beta={} R={}",
            worst_cell.0, worst_cell.1
        )
    });
    rep.note(format!(
        "measured envelope: ||M^R - J|| <= {envelope_const:.3} * (1-sqrt(1-beta))^R over the sweep \
         (sqrt(2) = {:.3}, sqrt(14) = {:.3})",
        std::f64::consts::SQRT_2,
        14.0f64.sqrt()
    ));
    rep.finish()
}

/// Criterion 5: chain-loss gradient checks — finite differences, sup-norm
/// bounds, one-new-coordinate activation, and the range bound.
pub fn criterion_5_zero_chain() -> CriterionReport {
    let mut rep = ReportBuilder::new(5, "zero-chain-suite");
    let d = 20;
    let chain = zero_chain_loss(d).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut g = Array1::zeros(d);

    // finite differences at 100 points, relative 1e-5
    for _ in 0..100 {
        let x = Array1::from_iter((0..d).map(|_| rng.gen_range(-2.0..2.0)));
        chain.grad(x.view(), &mut g);
        let h = 1e-5;
        let mut fd = Array1::zeros(d);
        for m in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[m] += h;
            xm[m] -= h;
            fd[m] = (chain.value(xp.view()) - chain.value(xm.view())) / (2.0 * h);
        }
        let err = (&g - &fd).iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        rep.check(err / scale <= 1e-5, || {
            format!("finite-difference error {:.2e}", err / scale)
        });
    }

    // sup-norm bounds at 1e3 points each
    for _ in 0..1000 {
        let mut x = Array1::from_iter((0..d).map(|_| rng.gen_range(-3.0..3.0)));
        chain.grad(x.view(), &mut g);
        let sup = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        rep.check(sup <= G0, || format!("gradient sup-norm {sup} above {G0}"));

        x[d - 1] = 0.0;
        chain.grad(x.view(), &mut g);
        let sup = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        rep.check(sup >= 1.0, || {
            format!("gradient sup-norm {sup} below 1 with last coordinate zero")
        });
    }

    // activation: at most one new coordinate, both parities
    for trial in 0..1000 {
        let p = trial % d;
        let mut x = Array1::zeros(d);
        for v in x.iter_mut().take(p) {
            let mag = rng.gen_range(0.6..2.0);
            *v = if rng.gen_bool(0.5) { mag } else { -mag };
        }
        chain.grad(x.view(), &mut g);
        rep.check(prog(g.view()) <= prog(x.view()) + 1, || {
            format!("activation jumped past prog+1 at prog={p}")
        });
    }

    // one-sided range bound: l(x) - l_lower <= Delta0 * d, with l_lower from
    // the product bounds sup Psi < e and sup Phi < sqrt(2 pi e)
    let sup_phi = (2.0 * std::f64::consts::PI * std::f64::consts::E).sqrt();
    let l_lower = -sup_phi - (d as f64 - 1.0) * std::f64::consts::E * sup_phi;
    for _ in 0..1000 {
        let x = Array1::from_iter((0..d).map(|_| rng.gen_range(-1.0..1.0)));
        let v = chain.value(x.view());
        rep.check(v - l_lower <= DELTA0 * d as f64, || {
            format!("range bound violated: value {v}, floor {l_lower}")
        });
    }
    rep.finish()
}

/// Criterion 6: on the split chain over the degree-2 ring, activation never
/// outruns `floor(T / dist(E1, E2)) + 1`, for both engines over 5 seeds.
pub fn criterion_6_propagation() -> CriterionReport {
    let mut rep = ReportBuilder::new(6, "info-propagation");
    let n = 12;
    let d = 40;
    let budget = 500usize;
    let w = lattice_weight_matrix(n, 2, beta_max(n)).unwrap();
    let base = split_zero_chain_problem(n, d, 3.0 * L0, 1.0).unwrap();
    let problem = bernoulli_oracle(base, 0.75).unwrap();
    let r_mg = choose_r_nonconvex(n, w.beta(), 0.0, 1.0).unwrap();
    let mut max_prog = 0usize;

    for seed in 1..=5u64 {
        for (alg, rounds) in [(Algorithm::Dsgd, 1usize), (Algorithm::MgDsgd, r_mg)] {
            let spec = RunSpec {
                algorithm: alg,
                schedule: Schedule::new(0.02, rounds, Regime::NonConvex).unwrap(),
                budget,
                seed,
                eta_variant: EtaVariant::Standard,
                x0: None,
                record_stride: 1,
            };
            let out = run(&problem, &w, &spec).unwrap();
            let trace = out.prog_trace.as_ref().unwrap();
            rep.check(trace.dist_blocks == Some(3), || {
                format!("block distance {:?}, expected 3", trace.dist_blocks)
            });
            let comms: Vec<usize> = out.records.iter().map(|r| r.t).collect();
            rep.check(trace.respects_propagation_bound(&comms), || {
                format!("propagation bound violated ({} seed {seed})", alg.name())
            });
            max_prog = max_prog.max(*trace.running_max.last().unwrap());
        }
    }
    rep.check(max_prog >= 1, || "no run activated any coordinate".into());
    rep.note(format!("deepest activation over all runs: {max_prog}"));
    rep.finish()
}

/// Criterion 7: plain gradient descent recovers the geometric minimizer of
/// the split tridiagonal instance to 1e-6, and the closed form satisfies the
/// stationarity system to 1e-10.
pub fn criterion_7_nesterov() -> CriterionReport {
    let mut rep = ReportBuilder::new(7, "tridiagonal-instance");
    for (l, mu) in [(2.0, 1.0), (4.0, 1.0), (1.0, 0.1)] {
        let d = truncation_dim(l, mu, 1.0).unwrap();
        let p = nesterov_splitting_problem(9, d, l, mu, 1.0).unwrap();
        let xs = p.x_star().unwrap();
        let res = p.optimality_residual(xs.view());
        rep.check(res <= 1e-10, || {
            format!("stationarity residual {res:e} at L={l} mu={mu}")
        });

        let mut x = Array1::zeros(d);
        let mut g = Array1::zeros(d);
        let gamma = 1.0 / l;
        for _ in 0..5000 {
            p.mean_grad(x.view(), &mut g);
            x.scaled_add(-gamma, &g);
        }
        let sup = (&x - &xs).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        rep.check(sup <= 1e-6, || {
            format!("descent landed {sup:e} away from the closed form at L={l} mu={mu}")
        });
    }
    rep.finish()
}

/// Criterion 8: oracle statistics — unbiasedness within 4 standard errors
/// over 1e5 draws and variance bounds, for both oracle types at 3 points.
pub fn criterion_8_oracles() -> CriterionReport {
    let mut rep = ReportBuilder::new(8, "oracle-statistics");
    let trials = 100_000usize;

    // coordinate-blocking oracle on the split chain
    let base = split_zero_chain_problem(6, 8, 3.0 * L0, 1.0).unwrap();
    let p_block = 0.3;
    let oracle = bernoulli_oracle(base, p_block).unwrap();
    let plan = SeedPlan::new(0xabcd);
    let points: [Array1<f64>; 3] = [
        Array1::zeros(8),
        {
            let mut x = Array1::zeros(8);
            x[0] = 1.0;
            x
        },
        {
            let mut x = Array1::zeros(8);
            x[0] = -0.9;
            x[1] = 0.8;
            x
        },
    ];
    for (pi, x) in points.iter().enumerate() {
        let node = if prog(x.view()).is_multiple_of(2) { 0 } else { 4 };
        let mut exact = Array1::zeros(8);
        oracle.local_grad(node, x.view(), &mut exact);
        let cut = prog(x.view());

        let mut mean = Array1::<f64>::zeros(8);
        let mut sq_dev = 0.0;
        let mut g = Array1::zeros(8);
        for t in 0..trials {
            let mut rng = plan.stream(node, t, pi + 1);
            oracle.sample_oracle(node, x.view(), &mut rng, &mut g);
            // untouched coordinates come back exactly
            for j in 0..cut {
                rep.check(g[j] == exact[j], || {
                    format!("blocked oracle modified coordinate {j} below prog")
                });
            }
            mean += &g;
            sq_dev += (&g - &exact).iter().map(|v| v * v).sum::<f64>();
        }
        mean /= trials as f64;
        let var = sq_dev / trials as f64;

        let blocked_sq: f64 = exact.iter().skip(cut).map(|v| v * v).sum();
        let want_var = blocked_sq * (1.0 - p_block) / p_block;
        // standard error of each coordinate mean under the blocking model;
        // zero-variance coordinates only accumulate summation rounding
        for j in 0..8 {
            let coord_var = if j >= cut {
                exact[j] * exact[j] * (1.0 - p_block) / p_block
            } else {
                0.0
            };
            let se = (coord_var / trials as f64).sqrt();
            let tol = 4.0 * se + 1e-9 * exact[j].abs().max(1.0);
            rep.check((mean[j] - exact[j]).abs() <= tol, || {
                format!(
                    "blocking oracle biased at point {pi}, coord {j}: {} vs {}",
                    mean[j], exact[j]
                )
            });
        }
        rep.check(
            (var - want_var).abs() <= 0.05 * want_var.max(1e-9),
            || format!("blocking oracle variance {var} vs expected {want_var}"),
        );
        if let Some(bound) = oracle.noise_sq() {
            rep.check(var <= bound * 1.05, || {
                format!("variance {var} above the class bound {bound}")
            });
        }
    }

    // additive Gaussian oracle on the displaced quadratic
    let sigma_sq = 2.0;
    let d = 10;
    let gauss = pl_quadratic_pair(4, d, 1.0, 0.2, 1.0, PlSign::Plus, sigma_sq).unwrap();
    let gpoints: [Array1<f64>; 3] = [
        Array1::zeros(d),
        Array1::from_elem(d, 0.7),
        Array1::from_iter((0..d).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 })),
    ];
    for (pi, x) in gpoints.iter().enumerate() {
        let mut exact = Array1::zeros(d);
        gauss.local_grad(0, x.view(), &mut exact);
        let mut mean = Array1::<f64>::zeros(d);
        let mut sq_dev = 0.0;
        let mut g = Array1::zeros(d);
        for t in 0..trials {
            let mut rng = plan.stream(1, t, pi + 10);
            gauss.sample_oracle(0, x.view(), &mut rng, &mut g);
            mean += &g;
            sq_dev += (&g - &exact).iter().map(|v| v * v).sum::<f64>();
        }
        mean /= trials as f64;
        let var = sq_dev / trials as f64;
        let se = (sigma_sq / d as f64 / trials as f64).sqrt();
        for j in 0..d {
            rep.check((mean[j] - exact[j]).abs() <= 4.0 * se, || {
                format!("gaussian oracle biased at point {pi} coord {j}")
            });
        }
        rep.check((var - sigma_sq).abs() <= 0.05 * sigma_sq, || {
            format!("gaussian oracle variance {var} vs sigma_sq {sigma_sq}")
        });
    }
    rep.finish()
}

/// Criterion 9: with exact gradients, exact averaging, and a PL objective,
/// the suboptimality contracts at least as fast as `(1 - mu gamma / 2)^k`.
pub fn criterion_9_pl_descent() -> CriterionReport {
    let mut rep = ReportBuilder::new(9, "pl-linear-descent");
    let n = 8;
    let d = 10;
    let (l, mu) = (1.0, 0.1);
    let p = heterogeneous_quadratic_suite(n, d, l, mu, 0.0, 0.0, 7).unwrap();
    let w = construct_weight_matrix(n, 0.0).unwrap();
    let gamma = 1.0 / (4.0 * l);

    // start on consensus at unit initial gap
    let spread: f64 = p.spectrum().sum();
    let x0 = Array1::from_elem(d, (2.0 / spread).sqrt());
    let spec = RunSpec {
        algorithm: Algorithm::Dsgd,
        schedule: Schedule::new(gamma, 1, Regime::Pl).unwrap(),
        budget: 200,
        seed: 3,
        eta_variant: EtaVariant::Standard,
        x0: Some(x0),
        record_stride: 1,
    };
    let out = run(&p, &w, &spec).unwrap();
    let delta = out.records[0].subopt.unwrap();
    rep.note(format!("initial gap {delta:.6}"));
    for r in &out.records {
        let bound = (1.0 - mu * gamma / 2.0).powi(r.k as i32) * delta;
        rep.check(r.subopt.unwrap() <= bound * (1.0 + 1e-9), || {
            format!("descent slower than the PL rate at k={}", r.k)
        });
    }
    rep.finish()
}

// Experiment sizes for the two trend criteria. One-gossip budgets grow with
// beta so that each run's schedule step size is small enough for the
// consensus terms to sit below the noise floor, and each run settles on
// that floor well inside its budget.
const ORDERING_SEEDS: std::ops::RangeInclusive<u64> = 1..=5;
const ORDERING_DSGD_BUDGETS: [(f64, usize); 3] =
    [(0.5, 60_000), (0.9, 250_000), (0.95, 700_000)];
const ORDERING_MG_BUDGET: usize = 100_000;
const ORDERING_B_SQ: f64 = 0.01;
const ORDERING_DELTA: f64 = 0.02;
const ORDERING_STRIDE: usize = 50;

fn ordering_problem(n: usize) -> crate::problems::HeterogeneousQuadratic {
    heterogeneous_quadratic_suite(n, 20, 1.0, 0.1, ORDERING_B_SQ, 1.0, 1).unwrap()
}

fn consensus_start(p: &dyn Problem, delta: f64) -> Array1<f64> {
    // f(x0) - f* = delta for the shared-curvature quadratic: x0 = t * ones
    let d = p.dim();
    let mut probe = Array1::zeros(d);
    let base = p.mean_loss(probe.view()) - p.f_star().unwrap();
    probe.fill(1.0);
    let unit = p.mean_loss(probe.view()) - p.f_star().unwrap() - base;
    Array1::from_elem(d, ((delta - base).max(0.0) / unit).sqrt())
}

fn dsgd_transient(
    p: &dyn Problem,
    w: &WeightMatrix,
    budget: usize,
    seed: u64,
) -> TransientEstimate {
    let n = p.n();
    let gamma = lr_nonconvex_dsgd(n, budget, p.smoothness(), w.beta(), 1.0, ORDERING_DELTA)
        .unwrap();
    let spec = RunSpec {
        algorithm: Algorithm::Dsgd,
        schedule: Schedule::new(gamma, 1, Regime::NonConvex).unwrap(),
        budget,
        seed,
        eta_variant: EtaVariant::Standard,
        x0: Some(consensus_start(p, ORDERING_DELTA)),
        record_stride: ORDERING_STRIDE,
    };
    let out = run(p, w, &spec).unwrap();
    transient_iterations(&out.records, 1.0, n).unwrap()
}

fn median(mut xs: Vec<usize>) -> usize {
    xs.sort_unstable();
    xs[xs.len() / 2]
}

fn spearman(xs: &[f64], ys: &[usize]) -> f64 {
    let rank = |vals: Vec<f64>| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..vals.len()).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let mut ranks = vec![0.0; vals.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && vals[idx[j + 1]] == vals[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &m in &idx[i..=j] {
                ranks[m] = avg;
            }
            i = j + 1;
        }
        ranks
    };
    let rx = rank(xs.to_vec());
    let ry = rank(ys.iter().map(|&v| v as f64).collect());
    let m = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / m;
    let my = ry.iter().sum::<f64>() / m;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

/// Criterion 10: multi-gossip transients stay at or below one-gossip
/// transients in paired runs at `beta = 0.95`, and one-gossip transients are
/// nondecreasing across `beta in {0.5, 0.9, 0.95}`.
pub fn criterion_10_ordering() -> CriterionReport {
    let mut rep = ReportBuilder::new(10, "transient-ordering");
    let n = 16;
    let p = ordering_problem(n);

    // paired comparison at beta = 0.95
    let w95 = construct_weight_matrix(n, 0.95).unwrap();
    let dsgd_budget = ORDERING_DSGD_BUDGETS
        .iter()
        .find(|(b, _)| *b == 0.95)
        .unwrap()
        .1;
    let r_mg = choose_r_nonconvex(n, w95.beta(), ORDERING_B_SQ, 1.0).unwrap();
    let mut wins = 0usize;
    let mut pair_lines = Vec::new();
    for seed in ORDERING_SEEDS {
        let t_dsgd = dsgd_transient(&p, &w95, dsgd_budget, seed);
        let outer = ORDERING_MG_BUDGET / r_mg;
        let sigma_tilde = 1.0 / (r_mg as f64).sqrt();
        let beta_tilde = effective_beta(w95.beta(), r_mg);
        let gamma =
            lr_nonconvex_mg(n, outer, 1.0, beta_tilde, sigma_tilde, ORDERING_DELTA).unwrap();
        let spec = RunSpec {
            algorithm: Algorithm::MgDsgd,
            schedule: Schedule::new(gamma, r_mg, Regime::NonConvex).unwrap(),
            budget: ORDERING_MG_BUDGET,
            seed,
            eta_variant: EtaVariant::Standard,
            x0: Some(consensus_start(&p, ORDERING_DELTA)),
            record_stride: 1,
        };
        let out = run(&p, &w95, &spec).unwrap();
        let t_mg = transient_iterations(&out.records, 1.0, n).unwrap();
        if t_mg.as_ord() <= t_dsgd.as_ord() {
            wins += 1;
        }
        pair_lines.push(format!(
            "seed {seed}: multi-gossip T* {:?} vs one-gossip T* {:?}",
            t_mg, t_dsgd
        ));
    }
    rep.check(wins >= 4, || {
        format!("multi-gossip won only {wins}/5 paired runs")
    });
    for l in pair_lines {
        rep.note(l);
    }

    // monotone transients across beta
    let mut medians = Vec::new();
    let betas: Vec<f64> = ORDERING_DSGD_BUDGETS.iter().map(|(b, _)| *b).collect();
    for (beta, budget) in ORDERING_DSGD_BUDGETS {
        let w = construct_weight_matrix(n, beta).unwrap();
        let ts: Vec<usize> = ORDERING_SEEDS
            .map(|seed| dsgd_transient(&p, &w, budget, seed).as_ord())
            .collect();
        medians.push(median(ts));
    }
    let rho = spearman(&betas, &medians);
    rep.note(format!(
        "one-gossip median T*: beta 0.5 -> {}, 0.9 -> {}, 0.95 -> {} (rank corr {rho:.3})",
        fmt_ord(medians[0]),
        fmt_ord(medians[1]),
        fmt_ord(medians[2])
    ));
    rep.check(rho >= 0.9, || format!("rank correlation {rho:.3} below 0.9"));
    rep.finish()
}

fn fmt_ord(v: usize) -> String {
    if v == usize::MAX {
        "not-reached".into()
    } else {
        v.to_string()
    }
}

const SPEEDUP_BUDGET: usize = 60_000;
const SPEEDUP_EPSILON: f64 = 1e-3;

/// Criterion 11: with exact averaging, doubling the node count roughly
/// halves the iterations needed to reach a fixed gradient-norm target.
pub fn criterion_11_speedup() -> CriterionReport {
    let mut rep = ReportBuilder::new(11, "linear-speedup");
    let mut medians = Vec::new();
    for &n in &[8usize, 16] {
        let p = heterogeneous_quadratic_suite(n, 20, 1.0, 0.1, 0.0, 1.0, 2).unwrap();
        let w = construct_weight_matrix(n, 0.0).unwrap();
        let r = choose_r_nonconvex(n, 0.0, 0.0, 1.0).unwrap();
        let outer = SPEEDUP_BUDGET / r;
        let sigma_tilde = 1.0 / (r as f64).sqrt();
        let gamma = lr_nonconvex_mg(n, outer, 1.0, 0.0, sigma_tilde, 1.0).unwrap();
        let mut crossings = Vec::new();
        for seed in 1..=5u64 {
            let spec = RunSpec {
                algorithm: Algorithm::MgDsgd,
                schedule: Schedule::new(gamma, r, Regime::NonConvex).unwrap(),
                budget: SPEEDUP_BUDGET,
                seed,
                eta_variant: EtaVariant::Standard,
                x0: Some(consensus_start(&p, 1.0)),
                record_stride: 1,
            };
            let out = run(&p, &w, &spec).unwrap();
            let hit = out
                .records
                .iter()
                .find(|rec| rec.t > 0 && rec.grad_norm_sq <= SPEEDUP_EPSILON);
            match hit {
                Some(rec) => crossings.push(rec.t),
                None => rep.check(false, || {
                    format!("n={n} seed={seed} never reached epsilon {SPEEDUP_EPSILON}")
                }),
            }
        }
        if crossings.is_empty() {
            return rep.finish();
        }
        medians.push(median(crossings));
    }
    let ratio = medians[0] as f64 / medians[1] as f64;
    rep.note(format!(
        "median iterations to epsilon: n=8 -> {}, n=16 -> {} (ratio {ratio:.2})",
        medians[0], medians[1]
    ));
    rep.check((1.3..=2.7).contains(&ratio), || {
        format!("speedup ratio {ratio:.2} outside [1.3, 2.7]")
    });
    rep.finish()
}

/// Suite names accepted by `run_suite`.
pub const SUITES: [(&str, usize); 11] = [
    ("spectrum", 1),
    ("distance", 2),
    ("theorem2", 3),
    ("contraction", 4),
    ("zero-chain", 5),
    ("propagation", 6),
    ("nesterov", 7),
    ("oracles", 8),
    ("pl-descent", 9),
    ("transient-ordering", 10),
    ("linear-speedup", 11),
];

pub fn run_criterion(id: usize) -> Option<CriterionReport> {
    Some(match id {
        1 => criterion_1_spectrum(),
        2 => criterion_2_distance(),
        3 => criterion_3_construction(),
        4 => criterion_4_contraction(),
        5 => criterion_5_zero_chain(),
        6 => criterion_6_propagation(),
        7 => criterion_7_nesterov(),
        8 => criterion_8_oracles(),
        9 => criterion_9_pl_descent(),
        10 => criterion_10_ordering(),
        11 => criterion_11_speedup(),
        _ => return None,
    })
}

/// Runs one named suite, or everything for `"all"`.
pub fn run_suite(name: &str) -> Option<Vec<CriterionReport>> {
    if name == "all" {
        return Some((1..=11).map(|id| run_criterion(id).unwrap()).collect());
    }
    SUITES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|&(_, id)| vec![run_criterion(id).unwrap()])
}
