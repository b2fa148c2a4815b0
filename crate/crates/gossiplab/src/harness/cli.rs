//! Command-line front end.
//!
//! Subcommands:
//!   topology     construct a weight matrix for (n, beta) and report it
//!   gossip-check contraction sweep of the accelerated gossip recursion
//!   run          execute one manifest file
//!   sweep        expand a manifest over a parameter grid and run the cells
//!   verify       run the structural verification suite

use std::fs;

use super::{expand_sweep, run_batch, run_manifest, sweep_beta_diameter, Manifest};
use crate::gossip::{mixing_polynomial, EtaVariant};
use crate::topology::{connectivity_measure, construct_weight_matrix, diameter};
use crate::verify;

const USAGE: &str = "\
gossiplab — ring-lattice gossip topologies and decentralized SGD experiments

USAGE:
  gossiplab topology --n <N> --beta <B> [--save <PATH>]
  gossiplab gossip-check [--n <N>] [--betas <B1,B2,..>] [--r-max <R>] [--variant standard|alternate|both]
  gossiplab run <MANIFEST>
  gossiplab sweep <MANIFEST> --vary key=v1,v2,.. [--vary ..] [--jobs <N>]
  gossiplab verify [--suite <NAME>|all] [--list]
  gossiplab diameter-sweep [--n <N1,N2,..>] [--points <P>]

Output directory defaults to ./runs, or the GOSSIPLAB_OUT environment variable.
";

struct Args {
    positional: Vec<String>,
    flags: Vec<(String, Option<String>)>,
}

impl Args {
    fn parse(argv: &[String]) -> Result<Self, String> {
        let mut positional = Vec::new();
        let mut flags = Vec::new();
        let mut it = argv.iter().peekable();
        while let Some(a) = it.next() {
            if let Some(name) = a.strip_prefix("--") {
                let value = if name == "list" {
                    None
                } else {
                    Some(
                        it.next()
                            .ok_or_else(|| format!("flag --{name} needs a value"))?
                            .clone(),
                    )
                };
                flags.push((name.to_string(), value));
            } else {
                positional.push(a.clone());
            }
        }
        Ok(Self { positional, flags })
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.flags
            .iter()
            .find(|(n, _)| n == name)
            .and_then(|(_, v)| v.as_deref())
    }

    fn has(&self, name: &str) -> bool {
        self.flags.iter().any(|(n, _)| n == name)
    }

    fn get_all(&self, name: &str) -> Vec<&str> {
        self.flags
            .iter()
            .filter(|(n, _)| n == name)
            .filter_map(|(_, v)| v.as_deref())
            .collect()
    }
}

fn parse_flag<T: std::str::FromStr>(args: &Args, name: &str, default: T) -> Result<T, String> {
    match args.get(name) {
        None => Ok(default),
        Some(raw) => raw
            .parse()
            .map_err(|_| format!("flag --{name}: cannot parse `{raw}`")),
    }
}

/// Entry point; returns the process exit code.
pub fn cli_main(argv: &[String]) -> i32 {
    let Some((cmd, rest)) = argv.split_first() else {
        eprint!("{USAGE}");
        return 2;
    };
    let args = match Args::parse(rest) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let result = match cmd.as_str() {
        "topology" => cmd_topology(&args),
        "gossip-check" => cmd_gossip_check(&args),
        "run" => cmd_run(&args),
        "sweep" => cmd_sweep(&args),
        "verify" => cmd_verify(&args),
        "diameter-sweep" => cmd_diameter_sweep(&args),
        "help" | "--help" | "-h" => {
            print!("{USAGE}");
            return 0;
        }
        other => Err(format!("unknown subcommand `{other}`\n{USAGE}")),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn cmd_topology(args: &Args) -> Result<i32, String> {
    let n: usize = args
        .get("n")
        .ok_or("topology needs --n")?
        .parse()
        .map_err(|_| "flag --n: not an integer".to_string())?;
    let beta: f64 = args
        .get("beta")
        .ok_or("topology needs --beta")?
        .parse()
        .map_err(|_| "flag --beta: not a number".to_string())?;
    let w = construct_weight_matrix(n, beta).map_err(|e| e.to_string())?;
    let (kind, k, d) = if w.graph().is_complete() {
        ("complete", n - 1, 1)
    } else {
        let k = w.graph().degree_count();
        ("ring-lattice", k, diameter(n, k).map_err(|e| e.to_string())?)
    };
    println!("graph:          {kind} (n = {n}, k = {k})");
    println!("diameter:       {d}");
    println!("target beta:    {beta}");
    println!("measured beta:  {}", w.beta());
    println!("D*sqrt(1-beta): {}", d as f64 * (1.0 - beta).sqrt());
    if let Some(path) = args.get("save") {
        let mut buf = Vec::new();
        w.write_text(&mut buf).map_err(|e| e.to_string())?;
        fs::write(path, buf).map_err(|e| e.to_string())?;
        println!("saved:          {path}");
    }
    Ok(0)
}

fn cmd_gossip_check(args: &Args) -> Result<i32, String> {
    let n: usize = parse_flag(args, "n", 32)?;
    let r_max: usize = parse_flag(args, "r-max", 50)?;
    let betas: Vec<f64> = match args.get("betas") {
        None => vec![0.5, 0.8, 0.9, 0.95, 0.99],
        Some(raw) => raw
            .split(',')
            .map(|t| t.parse().map_err(|_| format!("bad beta `{t}`")))
            .collect::<Result<_, _>>()?,
    };
    let variants: Vec<EtaVariant> = match args.get("variant").unwrap_or("standard") {
        "standard" => vec![EtaVariant::Standard],
        "alternate" => vec![EtaVariant::Alternate],
        "both" => vec![EtaVariant::Standard, EtaVariant::Alternate],
        other => return Err(format!("flag --variant: unknown `{other}`")),
    };

    println!("variant    beta    worst ||M^R - J|| / envelope   violations(R<=  {r_max})");
    for variant in variants {
        for &beta in &betas {
            let w = construct_weight_matrix(n, beta).map_err(|e| e.to_string())?;
            let eta = variant.eta(w.beta()).map_err(|e| e.to_string())?;
            let base = beta / (1.0 + (1.0 - beta).sqrt());
            let mut worst = 0.0f64;
            let mut violations = 0;
            for rounds in 1..=r_max {
                let m = mixing_polynomial(&w, eta, rounds);
                let norm = connectivity_measure(m.view()).map_err(|e| e.to_string())?;
                let bound = std::f64::consts::SQRT_2 * base.powi(rounds as i32);
                worst = worst.max(norm / bound);
                if norm > bound {
                    violations += 1;
                }
            }
            println!(
                "{:<10} {beta:<7} {worst:<29.4} {violations}",
                variant.name()
            );
        }
    }
    Ok(0)
}

fn cmd_run(args: &Args) -> Result<i32, String> {
    let path = args
        .positional
        .first()
        .ok_or("run needs a manifest path")?;
    let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let manifest = Manifest::parse(&text).map_err(|e| e.to_string())?;
    let art = run_manifest(&manifest).map_err(|e| e.to_string())?;
    println!("records:   {}", art.summary.rows);
    println!("gamma:     {}", art.resolved_gamma);
    println!("rounds:    {}", art.resolved_rounds);
    println!("final ||grad f||^2: {}", art.summary.final_grad_norm_sq);
    println!("min   ||grad f||^2: {}", art.summary.min_grad_norm_sq);
    println!("avg   ||grad f||^2: {}", art.summary.avg_grad_norm_sq);
    if let Some(s) = art.summary.final_subopt {
        println!("final f - f*:       {s}");
    }
    println!("final consensus:    {}", art.summary.final_consensus);
    println!("csv:       {}", art.csv_path.display());
    println!("manifest:  {}", art.manifest_path.display());
    Ok(0)
}

fn cmd_sweep(args: &Args) -> Result<i32, String> {
    let path = args
        .positional
        .first()
        .ok_or("sweep needs a manifest path")?;
    let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let base = Manifest::parse(&text).map_err(|e| e.to_string())?;

    let mut vary = Vec::new();
    for clause in args.get_all("vary") {
        let (key, values) = clause
            .split_once('=')
            .ok_or_else(|| format!("--vary `{clause}`: expected key=v1,v2,.."))?;
        vary.push((
            key.trim().to_string(),
            values.split(',').map(|v| v.trim().to_string()).collect(),
        ));
    }
    let jobs: usize = parse_flag(
        args,
        "jobs",
        std::thread::available_parallelism().map_or(1, |p| p.get()),
    )?;

    let cells = expand_sweep(&base, &vary).map_err(|e| e.to_string())?;
    println!("sweep: {} cells on {jobs} workers", cells.len());
    let results = run_batch(cells, jobs);
    let mut failures = 0;
    for (name, res) in results {
        match res {
            Ok(art) => println!(
                "{name}: rows={} final_grad={:.3e} csv={}",
                art.summary.rows,
                art.summary.final_grad_norm_sq,
                art.csv_path.display()
            ),
            Err(e) => {
                failures += 1;
                eprintln!("{name}: FAILED — {e}");
            }
        }
    }
    Ok(if failures == 0 { 0 } else { 1 })
}

fn cmd_verify(args: &Args) -> Result<i32, String> {
    if args.has("list") {
        for (name, id) in verify::SUITES {
            println!("{id:>2}  {name}");
        }
        return Ok(0);
    }
    let suite = args.get("suite").unwrap_or("all");
    let reports = verify::run_suite(suite)
        .ok_or_else(|| format!("unknown suite `{suite}` (try --list)"))?;
    let mut all_pass = true;
    for r in &reports {
        println!("{}", r.line());
        if !r.pass {
            all_pass = false;
            for d in &r.details {
                println!("    {d}");
            }
        }
    }
    Ok(if all_pass { 0 } else { 1 })
}

fn cmd_diameter_sweep(args: &Args) -> Result<i32, String> {
    let ns: Vec<usize> = match args.get("n") {
        None => vec![20, 50, 100, 200],
        Some(raw) => raw
            .split(',')
            .map(|t| t.parse().map_err(|_| format!("bad n `{t}`")))
            .collect::<Result<_, _>>()?,
    };
    let points: usize = parse_flag(args, "points", 12)?;
    let rows = sweep_beta_diameter(&ns, points).map_err(|e| e.to_string())?;
    println!("{:>5} {:>10} {:>9} {:>5} {:>9} {:>6}", "n", "beta", "k", "D", "ratio", "pass");
    let mut all = true;
    for r in rows {
        all &= r.pass;
        println!(
            "{:>5} {:>10.6} {:>9} {:>5} {:>9.4} {:>6}",
            r.n,
            r.beta,
            if r.complete { "complete".to_string() } else { r.k.to_string() },
            r.diameter,
            r.ratio,
            if r.pass { "ok" } else { "FAIL" }
        );
    }
    Ok(if all { 0 } else { 1 })
}
