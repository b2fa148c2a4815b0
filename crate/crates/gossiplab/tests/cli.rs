//! End-to-end checks of the command-line surface, driven through `cli_main`
//! in-process.

use std::fs;

use gossiplab::harness::cli_main;

fn args(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

#[test]
fn topology_subcommand_reports_and_saves() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.txt");
    let code = cli_main(&args(&[
        "topology",
        "--n",
        "50",
        "--beta",
        "0.98",
        "--save",
        path.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let text = fs::read_to_string(&path).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("50 "), "header: {header}");
}

#[test]
fn run_subcommand_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = format!(
        "name = cli\n\
         problem = heterogeneous_quadratic\n\
         n = 8\nd = 4\nl = 1\nmu = 0.2\nb_sq = 0.5\nsigma_sq = 1\n\
         beta = 0.9\nalgorithm = mg_dsgd\nregime = nonconvex\n\
         t_budget = 40\nseed = 3\nx0 = 1\nout_dir = {}\n",
        dir.path().display()
    );
    let mpath = dir.path().join("m.cfg");
    fs::write(&mpath, &manifest).unwrap();

    assert_eq!(cli_main(&args(&["run", mpath.to_str().unwrap()])), 0);
    let csv: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .collect();
    assert_eq!(csv.len(), 1);
    let first = fs::read(csv[0].path()).unwrap();

    assert_eq!(cli_main(&args(&["run", mpath.to_str().unwrap()])), 0);
    let second = fs::read(csv[0].path()).unwrap();
    assert_eq!(first, second);
}

#[test]
fn sweep_subcommand_expands_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = format!(
        "name = sw\n\
         problem = heterogeneous_quadratic\n\
         n = 8\nd = 4\nl = 1\nmu = 0.2\nb_sq = 0.5\nsigma_sq = 1\n\
         beta = 0.5\nalgorithm = dsgd\nregime = nonconvex\n\
         t_budget = 30\nseed = 1\nx0 = 1\nout_dir = {}\n",
        dir.path().display()
    );
    let mpath = dir.path().join("m.cfg");
    fs::write(&mpath, &manifest).unwrap();
    let code = cli_main(&args(&[
        "sweep",
        mpath.to_str().unwrap(),
        "--vary",
        "seed=1,2",
        "--vary",
        "beta=0.5,0.9",
        "--jobs",
        "2",
    ]));
    assert_eq!(code, 0);
    let csvs = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .count();
    assert_eq!(csvs, 4);
}

#[test]
fn malformed_manifests_fail_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let mpath = dir.path().join("bad.cfg");
    fs::write(&mpath, "name = x\nproblem = unknown_family\n").unwrap();
    assert_ne!(cli_main(&args(&["run", mpath.to_str().unwrap()])), 0);
}

#[test]
fn verify_lists_suites() {
    assert_eq!(cli_main(&args(&["verify", "--list"])), 0);
    assert_ne!(cli_main(&args(&["verify", "--suite", "nonsense"])), 0);
}

#[test]
fn gossip_check_runs_the_sweep() {
    let code = cli_main(&args(&[
        "gossip-check",
        "--n",
        "16",
        "--betas",
        "0.5,0.9",
        "--r-max",
        "10",
        "--variant",
        "both",
    ]));
    assert_eq!(code, 0);
}

#[test]
fn diameter_sweep_passes_on_small_grid() {
    assert_eq!(cli_main(&args(&["diameter-sweep", "--n", "20,50", "--points", "6"])), 0);
}
