//! Experiment harness: manifests, CSV persistence, and parameter sweeps.

mod cli;
mod manifest;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array1;
use thiserror::Error;

pub use cli::cli_main;
pub use manifest::{Manifest, ProblemSpec, TopologySpec};

use crate::gossip::{choose_r_nonconvex, choose_r_pl, effective_beta, EtaVariant, GossipError};
use crate::optimizers::{
    lr_nonconvex_dsgd, lr_nonconvex_mg, lr_pl_dsgd, lr_pl_mg, run, summarize, Algorithm,
    OptimError, Regime, RunRecord, RunSpec, RunSummary, Schedule,
};
use crate::problems::{
    bernoulli_oracle, heterogeneous_quadratic_suite, nesterov_splitting_problem, pl_quadratic_pair,
    split_zero_chain_problem, truncation_dim, PlSign, Problem, ProblemError,
};
use crate::topology::{
    beta_max, case1_cutoff, construct_weight_matrix, diameter, TopologyError, WeightMatrix,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("sweep: {0}")]
    Sweep(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Gossip(#[from] GossipError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "GOSSIPLAB_OUT";

fn default_out_dir() -> PathBuf {
    std::env::var(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|_| PathBuf::from("runs"))
}

/// Everything a manifest resolves to before execution.
pub struct ResolvedRun {
    pub problem: Box<dyn Problem>,
    pub weights: WeightMatrix,
    pub spec: RunSpec,
}

/// Builds the problem, the weight matrix, and the run spec from a manifest,
/// filling in schedule values that were not overridden.
pub fn resolve(manifest: &Manifest) -> Result<ResolvedRun> {
    let weights = match &manifest.topology {
        TopologySpec::Constructed { beta } => construct_weight_matrix(manifest.n, *beta)?,
        TopologySpec::FromFile { path } => {
            let file = fs::File::open(path)?;
            WeightMatrix::read_text(file)?
        }
    };
    if weights.n() != manifest.n {
        return Err(HarnessError::Manifest(format!(
            "key `n` = {} does not match the {}-node weight matrix",
            manifest.n,
            weights.n()
        )));
    }

    let problem: Box<dyn Problem> = match &manifest.problem {
        ProblemSpec::HeterogeneousQuadratic {
            d,
            l,
            mu,
            b_sq,
            sigma_sq,
        } => Box::new(heterogeneous_quadratic_suite(
            manifest.n, *d, *l, *mu, *b_sq, *sigma_sq, manifest.seed,
        )?),
        ProblemSpec::PlQuadraticPair {
            d,
            l,
            mu,
            lambda,
            v,
            sigma_sq,
        } => {
            let sign = if *v >= 0 { PlSign::Plus } else { PlSign::Minus };
            Box::new(pl_quadratic_pair(
                manifest.n, *d, *l, *mu, *lambda, sign, *sigma_sq,
            )?)
        }
        ProblemSpec::SplitZeroChain { d, l, lambda, p } => {
            let base = split_zero_chain_problem(manifest.n, *d, *l, *lambda)?;
            Box::new(bernoulli_oracle(base, *p)?)
        }
        ProblemSpec::NesterovSplitting { l, mu, delta } => {
            let d = truncation_dim(*l, *mu, *delta)?;
            Box::new(nesterov_splitting_problem(manifest.n, d, *l, *mu, *delta)?)
        }
    };

    let algorithm = match manifest.algorithm.as_str() {
        "dsgd" => Algorithm::Dsgd,
        _ => Algorithm::MgDsgd,
    };
    let regime = match manifest.regime.as_str() {
        "pl" => Regime::Pl,
        _ => Regime::NonConvex,
    };

    let x0 = manifest
        .x0
        .map(|v| Array1::from_elem(problem.dim(), v));

    // delta: explicit override, else from the known optimum at the start
    let delta = match manifest.delta {
        Some(d) => Some(d),
        None => problem.f_star().map(|fs| {
            let start = x0
                .clone()
                .unwrap_or_else(|| Array1::zeros(problem.dim()));
            problem.mean_loss(start.view()) - fs
        }),
    };

    let sigma_sq = problem.noise_sq().unwrap_or(0.0);
    let b_sq = problem.heterogeneity_sq().unwrap_or(0.0);
    let beta = weights.beta();
    let n = manifest.n;
    let l = problem.smoothness();

    let rounds = match (algorithm, manifest.rounds) {
        (Algorithm::Dsgd, r) => r.unwrap_or(1),
        (Algorithm::MgDsgd, Some(r)) => r,
        (Algorithm::MgDsgd, None) => match regime {
            Regime::NonConvex => choose_r_nonconvex(n, beta, b_sq, sigma_sq)?,
            Regime::Pl => {
                let mu = problem.pl_constant().ok_or_else(|| {
                    HarnessError::Manifest("pl regime needs a problem with a PL constant".into())
                })?;
                choose_r_pl(n, beta, b_sq, sigma_sq, l, mu)?
            }
        },
    };

    let gamma = match manifest.gamma {
        Some(g) => g,
        None => {
            let delta = delta.ok_or_else(|| {
                HarnessError::Manifest(
                    "no step size given and no known optimum: set `gamma` or `delta`".into(),
                )
            })?;
            let k_outer = (manifest.t_budget / rounds).max(1);
            let sigma = sigma_sq.sqrt();
            match (algorithm, regime) {
                (Algorithm::Dsgd, Regime::NonConvex) => {
                    lr_nonconvex_dsgd(n, k_outer, l, beta, sigma, delta)?
                }
                (Algorithm::Dsgd, Regime::Pl) => {
                    let mu = problem.pl_constant().unwrap();
                    lr_pl_dsgd(n, k_outer, l, mu, beta, sigma, delta)?
                }
                (Algorithm::MgDsgd, Regime::NonConvex) => lr_nonconvex_mg(
                    n,
                    k_outer,
                    l,
                    effective_beta(beta, rounds),
                    sigma / (rounds as f64).sqrt(),
                    delta,
                )?,
                (Algorithm::MgDsgd, Regime::Pl) => {
                    let mu = problem.pl_constant().unwrap();
                    lr_pl_mg(
                        n,
                        k_outer,
                        l,
                        mu,
                        effective_beta(beta, rounds),
                        sigma / (rounds as f64).sqrt(),
                        delta,
                    )?
                }
            }
        }
    };

    let spec = RunSpec {
        algorithm,
        schedule: Schedule::new(gamma, rounds, regime)?,
        budget: manifest.t_budget,
        seed: manifest.seed,
        eta_variant: EtaVariant::Standard,
        x0,
        record_stride: 1,
    };
    Ok(ResolvedRun {
        problem,
        weights,
        spec,
    })
}

/// Output paths and summary of one executed manifest.
pub struct RunArtifacts {
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub summary: RunSummary,
    pub resolved_gamma: f64,
    pub resolved_rounds: usize,
}

/// Executes one manifest and persists its records plus an echo manifest with
/// the resolved schedule filled in.
pub fn run_manifest(manifest: &Manifest) -> Result<RunArtifacts> {
    let resolved = resolve(manifest)?;
    let out = run(resolved.problem.as_ref(), &resolved.weights, &resolved.spec)?;

    let dir = manifest
        .out_dir
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(default_out_dir);
    fs::create_dir_all(&dir)?;
    let stem = format!("{}-{}", manifest.name, manifest.hash());
    let csv_path = dir.join(format!("{stem}.csv"));
    let manifest_path = dir.join(format!("{stem}.manifest"));

    let mut csv = String::from("k,T,grad_norm_sq,subopt,consensus,prog\n");
    for r in &out.records {
        csv.push_str(&record_line(r));
    }
    write_atomic(&csv_path, csv.as_bytes())?;

    // echo manifest with the schedule choices made concrete
    let mut echo = manifest.clone();
    echo.gamma = Some(resolved.spec.schedule.gamma);
    echo.rounds = Some(resolved.spec.schedule.rounds);
    let mut text = echo.serialize();
    text.push_str(&format!("# problem: {}\n", resolved.problem.descriptor()));
    text.push_str(&format!(
        "# topology: n={} k={} measured_beta={}\n",
        resolved.weights.n(),
        resolved.weights.graph().degree_count(),
        resolved.weights.beta()
    ));
    write_atomic(&manifest_path, text.as_bytes())?;

    let summary = summarize(&out.records).expect("runs always record at least one row");
    Ok(RunArtifacts {
        csv_path,
        manifest_path,
        summary,
        resolved_gamma: resolved.spec.schedule.gamma,
        resolved_rounds: resolved.spec.schedule.rounds,
    })
}

fn record_line(r: &RunRecord) -> String {
    let subopt = r.subopt.map(|v| v.to_string()).unwrap_or_default();
    let prog = r.prog.map(|v| v.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{}\n",
        r.k, r.t, r.grad_norm_sq, subopt, r.consensus, prog
    )
}

/// Writes through a temp file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name().and_then(|s| s.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// One row of the diameter-connectivity sweep.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub n: usize,
    pub beta: f64,
    pub k: usize,
    pub diameter: usize,
    pub ratio: f64,
    pub complete: bool,
    /// Bounded-ratio check; lattice cells only.
    pub pass: bool,
}

/// Sweeps `D * sqrt(1 - beta)` over the construction. Lattice cells must
/// land in `[0.3, 6.0]`; complete-graph cells are reported without a flag.
pub fn sweep_beta_diameter(n_list: &[usize], betas_per_n: usize) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &n in n_list {
        let cutoff = case1_cutoff(n);
        let top = beta_max(n);
        for i in 0..betas_per_n {
            let beta = (top * (i as f64 / (betas_per_n - 1) as f64)).min(top);
            let beta = if beta > cutoff && n >= 10 {
                beta
            } else {
                beta.min(cutoff)
            };
            let w = construct_weight_matrix(n, beta)?;
            let complete = w.graph().is_complete();
            let (k, d) = if complete {
                (n - 1, 1)
            } else {
                let k = w.graph().degree_count();
                (k, diameter(n, k)?)
            };
            let ratio = d as f64 * (1.0 - beta).sqrt();
            rows.push(SweepRow {
                n,
                beta,
                k,
                diameter: d,
                ratio,
                complete,
                pass: complete || (0.3..=6.0).contains(&ratio),
            });
        }
    }
    Ok(rows)
}

/// Expands `--vary key=v1,v2,...` clauses into the cross-product of
/// manifests, by patching the serialized text and re-parsing (so every value
/// goes through the same typed coercion and diagnostics).
pub fn expand_sweep(base: &Manifest, vary: &[(String, Vec<String>)]) -> Result<Vec<Manifest>> {
    if vary.is_empty() {
        return Err(HarnessError::Sweep("no --vary clauses given".into()));
    }
    let mut cells: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in vary {
        if values.is_empty() {
            return Err(HarnessError::Sweep(format!("key `{key}` has no values")));
        }
        let mut next = Vec::with_capacity(cells.len() * values.len());
        for cell in &cells {
            for v in values {
                let mut c = cell.clone();
                c.push((key.clone(), v.clone()));
                next.push(c);
            }
        }
        cells = next;
    }

    let mut manifests = Vec::with_capacity(cells.len());
    for cell in cells {
        let mut text = base.serialize();
        let mut name_suffix = String::new();
        for (key, value) in &cell {
            let pattern = format!("{key} = ");
            let mut found = false;
            let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
            for line in lines.iter_mut() {
                if line.starts_with(&pattern) {
                    *line = format!("{key} = {value}");
                    found = true;
                    break;
                }
            }
            if !found {
                lines.push(format!("{key} = {value}"));
            }
            text = lines.join("\n");
            text.push('\n');
            name_suffix.push_str(&format!("-{key}{value}"));
        }
        let mut m = Manifest::parse(&text)?;
        m.name = format!("{}{}", base.name, sanitize(&name_suffix));
        manifests.push(m);
    }
    Ok(manifests)
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

/// Runs a batch of manifests on a bounded worker pool; cells are independent.
pub fn run_batch(manifests: Vec<Manifest>, jobs: usize) -> Vec<(String, Result<RunArtifacts>)> {
    let jobs = jobs.max(1);
    let queue = std::sync::Mutex::new(manifests.into_iter().enumerate().collect::<Vec<_>>());
    let results = std::sync::Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let item = queue.lock().unwrap().pop();
                let Some((idx, m)) = item else { break };
                let name = m.name.clone();
                let res = run_manifest(&m);
                results.lock().unwrap().push((idx, name, res));
            });
        }
    });
    let mut out = results.into_inner().unwrap();
    out.sort_by_key(|(idx, _, _)| *idx);
    out.into_iter().map(|(_, name, res)| (name, res)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_manifest(dir: &Path) -> Manifest {
        Manifest {
            name: "t".into(),
            problem: ProblemSpec::HeterogeneousQuadratic {
                d: 4,
                l: 1.0,
                mu: 0.2,
                b_sq: 0.5,
                sigma_sq: 1.0,
            },
            n: 8,
            topology: TopologySpec::Constructed { beta: 0.9 },
            algorithm: "mg_dsgd".into(),
            regime: "nonconvex".into(),
            t_budget: 60,
            seed: 5,
            out_dir: Some(dir.to_string_lossy().into_owned()),
            gamma: None,
            rounds: None,
            delta: None,
            x0: Some(1.0),
        }
    }

    #[test]
    fn manifest_runs_reproducibly() {
        let dir = tempfile::tempdir().unwrap();
        let m = small_manifest(dir.path());
        let a = run_manifest(&m).unwrap();
        let first = fs::read(&a.csv_path).unwrap();
        let b = run_manifest(&m).unwrap();
        assert_eq!(a.csv_path, b.csv_path);
        let second = fs::read(&b.csv_path).unwrap();
        assert_eq!(first, second, "reruns must be byte-identical");

        // K+1 rows plus header
        let rounds = a.resolved_rounds;
        let k = 60 / rounds;
        let text = String::from_utf8(first).unwrap();
        assert_eq!(text.lines().count(), k + 2);
        assert!(text.starts_with("k,T,grad_norm_sq,subopt,consensus,prog\n"));
    }

    #[test]
    fn echo_manifest_records_schedule_choices() {
        let dir = tempfile::tempdir().unwrap();
        let m = small_manifest(dir.path());
        let art = run_manifest(&m).unwrap();
        let echo = fs::read_to_string(&art.manifest_path).unwrap();
        assert!(echo.contains(&format!("gamma = {}", art.resolved_gamma)));
        assert!(echo.contains(&format!("rounds = {}", art.resolved_rounds)));
    }

    #[test]
    fn sweep_rows_stay_bounded() {
        let rows = sweep_beta_diameter(&[20, 50], 8).unwrap();
        assert_eq!(rows.len(), 16);
        assert!(rows.iter().all(|r| r.pass));
        // the whole grid witnesses a bounded spread of ratios
        let lattice: Vec<&SweepRow> = rows.iter().filter(|r| !r.complete).collect();
        assert!(!lattice.is_empty());
        let max = lattice.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let min = lattice.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        assert!(max / min <= 20.0, "ratio spread {max}/{min}");
    }

    #[test]
    fn sweep_expansion_crosses_values() {
        let dir = tempfile::tempdir().unwrap();
        let base = small_manifest(dir.path());
        let cells = expand_sweep(
            &base,
            &[
                ("beta".into(), vec!["0.5".into(), "0.9".into()]),
                ("seed".into(), vec!["1".into(), "2".into(), "3".into()]),
            ],
        )
        .unwrap();
        assert_eq!(cells.len(), 6);
        assert!(cells.iter().all(|m| m.name.starts_with("t-beta")));
        let seeds: Vec<u64> = cells.iter().map(|m| m.seed).collect();
        assert_eq!(seeds, vec![1, 2, 3, 1, 2, 3]);
    }

    #[test]
    fn matrix_file_topology_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let w = construct_weight_matrix(8, 0.9).unwrap();
        let path = dir.path().join("w.txt");
        let mut buf = Vec::new();
        w.write_text(&mut buf).unwrap();
        fs::write(&path, buf).unwrap();

        let mut m = small_manifest(dir.path());
        m.topology = TopologySpec::FromFile {
            path: path.to_string_lossy().into_owned(),
        };
        let resolved = resolve(&m).unwrap();
        assert_eq!(resolved.weights.n(), 8);
    }

    #[test]
    fn batch_execution_is_order_stable() {
        let dir = tempfile::tempdir().unwrap();
        let base = small_manifest(dir.path());
        let cells = expand_sweep(&base, &[("seed".into(), vec!["1".into(), "2".into()])]).unwrap();
        let names: Vec<String> = cells.iter().map(|m| m.name.clone()).collect();
        let results = run_batch(cells, 2);
        let got: Vec<String> = results.iter().map(|(n, _)| n.clone()).collect();
        assert_eq!(names, got);
        assert!(results.iter().all(|(_, r)| r.is_ok()));
    }
}
