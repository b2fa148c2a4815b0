//! Desk-scale laboratory for decentralized stochastic optimization.
//!
//! The crate builds gossip topologies with a prescribed connectivity measure
//! `beta = ||W - (1/n) 1 1^T||_2`, runs one-gossip and multi-gossip
//! decentralized SGD on synthetic problem suites (heterogeneous quadratics,
//! zero-chain hard instances, a split tridiagonal quadratic with closed-form
//! minimizer), and verifies the structural claims the construction rests on:
//! the diameter-connectivity relation of ring lattices, the contraction of
//! accelerated gossip, information-propagation limits on zero chains, and
//! convergence-rate scalings.
//!
//! Modules:
//! - [`topology`]: ring lattices, circulant spectra, weight matrices.
//! - [`gossip`]: accelerated gossip averaging and round schedules.
//! - [`problems`]: synthetic losses with exact gradients and seeded oracles.
//! - [`optimizers`]: the two SGD engines, step-size schedules, run records.
//! - [`harness`]: manifests, CSV output, sweeps, and the CLI.
//! - [`verify`]: the structural verification suite with independent oracles.

pub mod gossip;
pub mod harness;
pub mod optimizers;
pub mod problems;
pub mod rng;
pub mod topology;
pub mod verify;

pub use gossip::{EtaVariant, GossipPlan};
pub use optimizers::{Algorithm, RunRecord, RunSpec, Schedule};
pub use problems::Problem;
pub use topology::{Graph, WeightMatrix};
