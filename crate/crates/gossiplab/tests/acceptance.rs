//! Acceptance suite: one test per structural criterion, each printing a
//! pass/fail line (visible under `--nocapture`) and asserting the result.
//!
//! The same checks back the `gossiplab verify` subcommand.

use gossiplab::verify::{self, CriterionReport};

fn assert_criterion(report: CriterionReport) {
    println!("{}", report.line());
    for d in &report.details {
        println!("    {d}");
    }
    assert!(
        report.pass,
        "criterion {} ({}) failed:\n{}",
        report.id,
        report.name,
        report.details.join("\n")
    );
}

#[test]
fn criterion_01_spectrum_oracle() {
    assert_criterion(verify::criterion_1_spectrum());
}

#[test]
fn criterion_02_distance_oracle() {
    assert_criterion(verify::criterion_2_distance());
}

#[test]
fn criterion_03_weight_construction() {
    assert_criterion(verify::criterion_3_construction());
}

#[test]
fn criterion_04_gossip_contraction() {
    assert_criterion(verify::criterion_4_contraction());
}

#[test]
fn criterion_05_zero_chain_suite() {
    assert_criterion(verify::criterion_5_zero_chain());
}

#[test]
fn criterion_06_information_propagation() {
    assert_criterion(verify::criterion_6_propagation());
}

#[test]
fn criterion_07_tridiagonal_closed_form() {
    assert_criterion(verify::criterion_7_nesterov());
}

#[test]
fn criterion_08_oracle_statistics() {
    assert_criterion(verify::criterion_8_oracles());
}

#[test]
fn criterion_09_pl_linear_descent() {
    assert_criterion(verify::criterion_9_pl_descent());
}

#[test]
fn criterion_10_transient_ordering() {
    assert_criterion(verify::criterion_10_ordering());
}

#[test]
fn criterion_11_linear_speedup() {
    assert_criterion(verify::criterion_11_speedup());
}
