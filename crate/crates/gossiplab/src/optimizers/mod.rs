//! Decentralized SGD engines and per-iteration metric extraction.
//!
//! Two algorithms share one state layout. The one-gossip step is
//!
//! ```text
//! X <- W (X - gamma * G~),        one oracle sample per node,
//! ```
//!
//! and the multi-gossip step accumulates `R` independent samples per node
//! before taking the local step and then runs `R` accelerated gossip rounds:
//!
//! ```text
//! G = (1/R) sum_r G~_r,  Phi = X - gamma G,  X <- FastGossipAverage(Phi, W, R).
//! ```
//!
//! Both count `R` gradient queries and `R` communication rounds per outer
//! step (`R = 1` for the one-gossip variant), so the budget accounting is
//! `T = K * R` after `K` outer rounds.

mod schedules;

use ndarray::{Array1, Array2};
use thiserror::Error;

pub use schedules::{
    lr_nonconvex_dsgd, lr_nonconvex_mg, lr_pl_dsgd, lr_pl_mg, Regime, Schedule,
};

use crate::gossip::{fast_gossip_average, EtaVariant, GossipError, GossipPlan};
use crate::problems::{prog_over_rows, Problem, ProgTrace};
use crate::rng::SeedPlan;
use crate::topology::{set_distance, TopologyError, WeightMatrix};

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("beta={beta} outside [0, 1)")]
    BetaOutOfRange { beta: f64 },
    #[error("need 0 < mu <= L, got mu={mu}, L={l}")]
    BadCurvature { mu: f64, l: f64 },
    #[error("schedules need at least one gossip round")]
    ZeroRounds,
    #[error("horizon K must be positive")]
    ZeroHorizon,
    #[error("no schedule term is finite; supply gamma explicitly")]
    ScheduleUndetermined,
    #[error("budget T={budget} is smaller than one outer round (R={rounds})")]
    BudgetTooSmall { budget: usize, rounds: usize },
    #[error("problem has n={problem_n} nodes but the weight matrix is {matrix_n}x{matrix_n}")]
    NodeCountMismatch { problem_n: usize, matrix_n: usize },
    #[error("initial point has {got} coordinates, problem dimension is {want}")]
    BadInitialPoint { got: usize, want: usize },
    #[error("one-gossip runs take rounds = 1, got {rounds}")]
    RoundsNotOne { rounds: usize },
    #[error("too few records ({got}) to fit the tail, need {min}")]
    TooFewRecords { got: usize, min: usize },
    #[error(transparent)]
    Gossip(#[from] GossipError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

pub type Result<T> = std::result::Result<T, OptimError>;

/// Stacked node iterates plus counters and the seed plan.
#[derive(Clone, Debug)]
pub struct OptimizerState {
    pub x: Array2<f64>,
    pub k: usize,
    pub seeds: SeedPlan,
    pub grad_queries: u64,
    pub comm_rounds: u64,
}

impl OptimizerState {
    /// All nodes start at `x0` (the origin when `None`).
    pub fn new(n: usize, d: usize, seed: u64, x0: Option<&Array1<f64>>) -> Result<Self> {
        let x = match x0 {
            None => Array2::zeros((n, d)),
            Some(v) => {
                if v.len() != d {
                    return Err(OptimError::BadInitialPoint {
                        got: v.len(),
                        want: d,
                    });
                }
                let mut x = Array2::zeros((n, d));
                for mut row in x.rows_mut() {
                    row.assign(v);
                }
                x
            }
        };
        Ok(Self {
            x,
            k: 0,
            seeds: SeedPlan::new(seed),
            grad_queries: 0,
            comm_rounds: 0,
        })
    }

    pub fn mean_iterate(&self) -> Array1<f64> {
        self.x.mean_axis(ndarray::Axis(0)).unwrap()
    }

    fn consensus_error(&self) -> f64 {
        let mean = self.mean_iterate();
        self.x
            .rows()
            .into_iter()
            .map(|r| (&r - &mean).iter().map(|v| v * v).sum::<f64>())
            .sum()
    }
}

fn sample_gradients(
    state: &OptimizerState,
    problem: &dyn Problem,
    rounds: usize,
) -> Array2<f64> {
    let (n, d) = state.x.dim();
    let mut acc = Array2::zeros((n, d));
    let mut g = Array1::zeros(d);
    for i in 0..n {
        let mut row = acc.row_mut(i);
        for r in 1..=rounds {
            let mut rng = state.seeds.stream(i, state.k, r);
            problem.sample_oracle(i, state.x.row(i), &mut rng, &mut g);
            row += &g.view();
        }
        row.mapv_inplace(|v| v / rounds as f64);
    }
    acc
}

/// One one-gossip step: sample, local step, one weight-matrix application.
pub fn dsgd_step(
    state: &mut OptimizerState,
    problem: &dyn Problem,
    w: &WeightMatrix,
    gamma: f64,
) -> Result<()> {
    check_dims(state, problem, w)?;
    let g = sample_gradients(state, problem, 1);
    let phi = &state.x - &(g * gamma);
    state.x = w.entries().dot(&phi);
    state.k += 1;
    state.grad_queries += 1;
    state.comm_rounds += 1;
    Ok(())
}

/// One multi-gossip step: accumulate `R` samples, local step, `R`
/// accelerated gossip rounds.
pub fn mg_dsgd_step(
    state: &mut OptimizerState,
    problem: &dyn Problem,
    plan: &GossipPlan,
    gamma: f64,
) -> Result<()> {
    check_dims(state, problem, plan.weight_matrix())?;
    let rounds = plan.rounds();
    let g = sample_gradients(state, problem, rounds);
    let phi = &state.x - &(g * gamma);
    state.x = fast_gossip_average(phi.view(), plan.weight_matrix(), plan.eta(), rounds)?;
    state.k += 1;
    state.grad_queries += rounds as u64;
    state.comm_rounds += rounds as u64;
    Ok(())
}

fn check_dims(state: &OptimizerState, problem: &dyn Problem, w: &WeightMatrix) -> Result<()> {
    if problem.n() != w.n() || state.x.nrows() != w.n() {
        return Err(OptimError::NodeCountMismatch {
            problem_n: problem.n(),
            matrix_n: w.n(),
        });
    }
    Ok(())
}

/// Which engine a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Dsgd,
    MgDsgd,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dsgd => "dsgd",
            Algorithm::MgDsgd => "mg_dsgd",
        }
    }
}

/// Everything a run needs besides the problem and the weight matrix.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub algorithm: Algorithm,
    pub schedule: Schedule,
    pub budget: usize,
    pub seed: u64,
    pub eta_variant: EtaVariant,
    pub x0: Option<Array1<f64>>,
    /// Metrics are recorded at `k = 0`, every `record_stride`-th round, and
    /// the final round. `1` records everything.
    pub record_stride: usize,
}

/// One metrics row. `t` counts gradient queries (equal to communication
/// rounds) consumed so far.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub k: usize,
    pub t: usize,
    pub grad_norm_sq: f64,
    pub subopt: Option<f64>,
    pub consensus: f64,
    pub prog: Option<usize>,
}

/// Full trajectory of one run, including the activation trace for
/// prog-instrumented problems.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub records: Vec<RunRecord>,
    pub prog_trace: Option<ProgTrace>,
    pub grad_queries: u64,
    pub comm_rounds: u64,
}

/// Runs `K = floor(budget / R)` outer rounds and records metrics at `k = 0`
/// and after every round (`K + 1` rows).
pub fn run(
    problem: &dyn Problem,
    w: &WeightMatrix,
    spec: &RunSpec,
) -> Result<RunOutput> {
    let rounds = spec.schedule.rounds;
    if spec.algorithm == Algorithm::Dsgd && rounds != 1 {
        return Err(OptimError::RoundsNotOne { rounds });
    }
    let outer = spec.budget / rounds;
    if outer == 0 {
        return Err(OptimError::BudgetTooSmall {
            budget: spec.budget,
            rounds,
        });
    }
    let mut state = OptimizerState::new(problem.n(), problem.dim(), spec.seed, spec.x0.as_ref())?;
    check_dims(&state, problem, w)?;

    let plan = match spec.algorithm {
        Algorithm::MgDsgd => Some(GossipPlan::new(w.clone(), rounds, spec.eta_variant)?),
        Algorithm::Dsgd => None,
    };

    let mut trace = if problem.tracks_prog() {
        Some(ProgTrace {
            running_max: Vec::with_capacity(outer + 1),
            dist_blocks: block_distance(problem, w)?,
        })
    } else {
        None
    };

    let mut records = Vec::with_capacity(outer + 1);
    let mut record = |state: &OptimizerState, trace: &mut Option<ProgTrace>| {
        let mean = state.mean_iterate();
        let mut g = Array1::zeros(problem.dim());
        problem.mean_grad(mean.view(), &mut g);
        let prog_now = trace.as_mut().map(|tr| {
            let p = prog_over_rows(&state.x).max(tr.running_max.last().copied().unwrap_or(0));
            tr.running_max.push(p);
            p
        });
        records.push(RunRecord {
            k: state.k,
            t: state.comm_rounds as usize,
            grad_norm_sq: g.iter().map(|v| v * v).sum(),
            subopt: problem.f_star().map(|fs| problem.mean_loss(mean.view()) - fs),
            consensus: state.consensus_error(),
            prog: prog_now,
        });
    };

    let stride = spec.record_stride.max(1);
    record(&state, &mut trace);
    for step in 1..=outer {
        match spec.algorithm {
            Algorithm::Dsgd => dsgd_step(&mut state, problem, w, spec.schedule.gamma)?,
            Algorithm::MgDsgd => {
                mg_dsgd_step(&mut state, problem, plan.as_ref().unwrap(), spec.schedule.gamma)?
            }
        }
        if step % stride == 0 || step == outer {
            record(&state, &mut trace);
        }
    }

    Ok(RunOutput {
        records,
        prog_trace: trace,
        grad_queries: state.grad_queries,
        comm_rounds: state.comm_rounds,
    })
}

fn block_distance(problem: &dyn Problem, w: &WeightMatrix) -> Result<Option<usize>> {
    match problem.active_blocks() {
        Some((e1, e2)) => Ok(Some(set_distance(w.graph(), &e1, &e2)?)),
        None => Ok(None),
    }
}

/// Summary statistics over a trajectory: last, best, and running-average
/// gradient norms.
#[derive(Clone, Copy, Debug)]
pub struct RunSummary {
    pub rows: usize,
    pub final_grad_norm_sq: f64,
    pub min_grad_norm_sq: f64,
    pub avg_grad_norm_sq: f64,
    pub final_subopt: Option<f64>,
    pub final_consensus: f64,
}

pub fn summarize(records: &[RunRecord]) -> Option<RunSummary> {
    let last = records.last()?;
    let after_start = &records[1.min(records.len() - 1)..];
    let min = records
        .iter()
        .map(|r| r.grad_norm_sq)
        .fold(f64::INFINITY, f64::min);
    let avg = if after_start.is_empty() {
        last.grad_norm_sq
    } else {
        after_start.iter().map(|r| r.grad_norm_sq).sum::<f64>() / after_start.len() as f64
    };
    Some(RunSummary {
        rows: records.len(),
        final_grad_norm_sq: last.grad_norm_sq,
        min_grad_norm_sq: min,
        avg_grad_norm_sq: avg,
        final_subopt: last.subopt,
        final_consensus: last.consensus,
    })
}

/// Transient estimate: iterations before the error curve settles under the
/// `c sigma / sqrt(nT)` envelope.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransientEstimate {
    Reached(usize),
    NotReached,
}

const TRANSIENT_TAIL_FRACTION: f64 = 0.25;
const TRANSIENT_MIN_TAIL: usize = 8;
const TRANSIENT_SLACK: f64 = 1.5;
const TRANSIENT_SMOOTH_MIN_HALF_WINDOW: usize = 10;

fn median_of(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    xs[xs.len() / 2]
}

/// Estimates the stationary error level from the trajectory tail, anchors
/// the envelope `c sigma / sqrt(nT)` so it passes through that level at the
/// final record, and returns the first `T` from which the curve stays below
/// `1.5` times the envelope for the rest of the run.
///
/// The instantaneous squared gradient norm is heavy-tailed and correlated
/// over many rounds around its stationary level, so the detection runs on a
/// windowed median covering a few percent of the run; otherwise late swings
/// push the estimate to the end of the budget.
pub fn transient_iterations(
    records: &[RunRecord],
    sigma: f64,
    n: usize,
) -> Result<TransientEstimate> {
    if sigma <= 0.0 {
        return Err(OptimError::NonPositive {
            name: "sigma",
            value: sigma,
        });
    }
    let usable: Vec<&RunRecord> = records.iter().filter(|r| r.t > 0).collect();
    let min_len = TRANSIENT_MIN_TAIL * 2;
    if usable.len() < min_len {
        return Err(OptimError::TooFewRecords {
            got: usable.len(),
            min: min_len,
        });
    }

    // trailing window: the smoothed value at a record only sees its past,
    // so early records keep their transient-scale values
    let window = (usable.len() / 25).max(2 * TRANSIENT_SMOOTH_MIN_HALF_WINDOW);
    let raw: Vec<f64> = usable.iter().map(|r| r.grad_norm_sq).collect();
    let smooth: Vec<f64> = (0..raw.len())
        .map(|i| median_of(raw[i.saturating_sub(window)..=i].to_vec()))
        .collect();

    let tail_len = ((usable.len() as f64 * TRANSIENT_TAIL_FRACTION) as usize)
        .max(TRANSIENT_MIN_TAIL);
    let tail_start = usable.len() - tail_len;
    let level = median_of(smooth[tail_start..].to_vec());
    if level == 0.0 {
        // noiseless tail; the envelope degenerates
        return Ok(TransientEstimate::Reached(usable[0].t));
    }
    let t_last = usable.last().unwrap().t;
    let c = level * ((n * t_last) as f64).sqrt() / sigma;

    let below =
        |i: usize| smooth[i] <= TRANSIENT_SLACK * c * sigma / ((n * usable[i].t) as f64).sqrt();
    let mut first_ok = None;
    for i in 0..usable.len() {
        if below(i) {
            if first_ok.is_none() {
                first_ok = Some(i);
            }
        } else {
            first_ok = None;
        }
    }
    Ok(match first_ok {
        Some(idx) => TransientEstimate::Reached(usable[idx].t),
        None => TransientEstimate::NotReached,
    })
}

impl TransientEstimate {
    /// Finite value for ordering, with `NotReached` treated as infinity.
    pub fn as_ord(&self) -> usize {
        match self {
            TransientEstimate::Reached(t) => *t,
            TransientEstimate::NotReached => usize::MAX,
        }
    }
}
