//! Gossip topologies: ring lattices, complete graphs, and doubly stochastic
//! weight matrices hitting a prescribed connectivity measure.
//!
//! The connectivity measure of a weight matrix `W` is
//! `beta = ||W - (1/n) 1 1^T||_2`; `beta = 0` is one-shot exact averaging and
//! `beta -> 1` means mixing is nearly absent. For any `beta` in
//! `[0, cos(pi/n)]` a matrix with that exact measure exists on either the
//! complete graph (small `beta`) or a ring lattice whose degree is chosen so
//! that the diameter scales like `1/sqrt(1 - beta)`.

mod graph;
mod spectral;

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Read, Write};

use ndarray::Array2;
use thiserror::Error;

pub use graph::{
    bfs_diameter, bfs_distance, complete_graph, diameter, distance, ring_lattice, set_distance,
    Degree, Graph,
};
pub use spectral::{
    connectivity_measure, h_k, h_k_bound_check, laplacian_spectrum, HkBoundReport, SpectrumReport,
    MEASUREMENT_FLOOR,
};

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("degree k={k} must be even")]
    OddDegree { k: usize },
    #[error("degree k={k} out of range for n={n} (need 2 <= k < n-1)")]
    DegreeOutOfRange { n: usize, k: usize },
    #[error("need at least {min} nodes, got {n}")]
    TooFewNodes { n: usize, min: usize },
    #[error("node index {index} out of range for n={n}")]
    NodeOutOfRange { index: usize, n: usize },
    #[error("operation requires a ring-lattice graph")]
    NotLattice,
    #[error("node set is empty")]
    EmptyNodeSet,
    #[error("beta={beta} outside [0, cos(pi/n)] = [0, {max}]")]
    BetaOutOfRange { beta: f64, max: f64 },
    #[error("lattice (n={n}, k={k}) cannot realize beta={beta}: spectral rescale leaves the PSD range")]
    InfeasibleRescale { n: usize, k: usize, beta: f64 },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("{axis} {index} sums to {sum}, expected 1 within tolerance")]
    NotStochastic {
        axis: &'static str,
        index: usize,
        sum: f64,
    },
    #[error("power iteration did not converge after {iterations} iterations (last estimate {last_estimate})")]
    PowerIterationStalled { iterations: usize, last_estimate: f64 },
    #[error("h_k bound check needs alpha = pi/n <= pi/(k+1); got n={n}, k={k}")]
    HkPrecondition { n: usize, k: usize },
    #[error("grid of {grid_size} points is too small")]
    GridTooSmall { grid_size: usize },
    #[error("matrix file: {0}")]
    ParseMatrix(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TopologyError>;

/// Dense doubly stochastic gossip matrix tied to the graph whose sparsity
/// pattern it respects. `beta` is the measured connectivity, not a nominal
/// target.
#[derive(Clone, Debug)]
pub struct WeightMatrix {
    graph: Graph,
    entries: Array2<f64>,
    beta: f64,
}

impl WeightMatrix {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    /// Text form: header `n k beta`, then dense rows. `k` is the lattice
    /// degree or the word `complete`.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let k = match self.graph.degree() {
            Degree::Lattice(k) => k.to_string(),
            Degree::Complete => "complete".to_string(),
        };
        writeln!(out, "{} {} {}", self.n(), k, self.beta)?;
        for row in self.entries.rows() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text<R: Read>(input: R) -> Result<Self> {
        let reader = BufReader::new(input);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| TopologyError::ParseMatrix("empty file".into()))??;
        let mut parts = header.split_whitespace();
        let n: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| TopologyError::ParseMatrix("bad node count in header".into()))?;
        let k_tok = parts
            .next()
            .ok_or_else(|| TopologyError::ParseMatrix("missing degree in header".into()))?;
        let beta: f64 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| TopologyError::ParseMatrix("bad beta in header".into()))?;
        let graph = if k_tok == "complete" {
            complete_graph(n)?
        } else {
            let k: usize = k_tok
                .parse()
                .map_err(|_| TopologyError::ParseMatrix(format!("bad degree `{k_tok}`")))?;
            ring_lattice(n, k)?
        };
        let mut entries = Array2::zeros((n, n));
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if i >= n {
                return Err(TopologyError::ParseMatrix(format!(
                    "expected {n} rows, found more"
                )));
            }
            let vals: std::result::Result<Vec<f64>, _> =
                line.split_whitespace().map(str::parse).collect();
            let vals =
                vals.map_err(|_| TopologyError::ParseMatrix(format!("bad number in row {i}")))?;
            if vals.len() != n {
                return Err(TopologyError::ParseMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    vals.len()
                )));
            }
            for (j, v) in vals.into_iter().enumerate() {
                entries[[i, j]] = v;
            }
        }
        Ok(Self {
            graph,
            entries,
            beta,
        })
    }
}

/// Upper end of the realizable connectivity range for `n` nodes.
pub fn beta_max(n: usize) -> f64 {
    (PI / n as f64).cos()
}

/// Below this cutoff the complete graph realizes the target directly.
pub fn case1_cutoff(n: usize) -> f64 {
    (PI / 9.0).cos().min(beta_max(n))
}

/// Weight matrix over the complete graph: `W = ((1-beta)/n) 1 1^T + beta I`.
pub fn complete_weight_matrix(n: usize, beta: f64) -> Result<WeightMatrix> {
    if !(0.0..1.0).contains(&beta) {
        return Err(TopologyError::BetaOutOfRange {
            beta,
            max: beta_max(n),
        });
    }
    let graph = complete_graph(n)?;
    let off = (1.0 - beta) / n as f64;
    let mut entries = Array2::from_elem((n, n), off);
    for i in 0..n {
        entries[[i, i]] += beta;
    }
    let measured = connectivity_measure(entries.view())?;
    Ok(WeightMatrix {
        graph,
        entries,
        beta: measured,
    })
}

/// Weight matrix over an explicit ring lattice: `W = I - c L` with the
/// rescale `c = (1 - beta) / min_nonzero(mu)`, so the largest nontrivial
/// eigenvalue lands exactly on `beta`. Fails if the rescale would push the
/// smallest eigenvalue below zero.
pub fn lattice_weight_matrix(n: usize, k: usize, beta: f64) -> Result<WeightMatrix> {
    if !(0.0..1.0).contains(&beta) {
        return Err(TopologyError::BetaOutOfRange {
            beta,
            max: beta_max(n),
        });
    }
    let graph = ring_lattice(n, k)?;
    let spectrum = laplacian_spectrum(n, k)?;
    let c = (1.0 - beta) / spectrum.min_nonzero;
    if c * spectrum.max_eigenvalue() > 1.0 + 1e-12 {
        return Err(TopologyError::InfeasibleRescale { n, k, beta });
    }
    let mut entries = Array2::zeros((n, n));
    let diag = 1.0 - c * k as f64;
    for i in 0..n {
        entries[[i, i]] = diag;
        for &j in graph.neighbors(i) {
            entries[[i, j]] = c;
        }
    }
    let measured = connectivity_measure(entries.view())?;
    Ok(WeightMatrix {
        graph,
        entries,
        beta: measured,
    })
}

/// Constructs a weight matrix with connectivity `beta_target` over `n` nodes.
///
/// Targets up to `cos(pi/9)` use the complete graph. Above that (possible
/// only for `n >= 10`) the lattice degree is
/// `k = 2 * ceil(n * sqrt(3 (1-beta) / (pi^2 (1 - pi^2/12))))`,
/// which keeps the diameter within constant factors of `1/sqrt(1-beta)`,
/// and the Laplacian rescale places the connectivity exactly on target.
pub fn construct_weight_matrix(n: usize, beta_target: f64) -> Result<WeightMatrix> {
    if n < 2 {
        return Err(TopologyError::TooFewNodes { n, min: 2 });
    }
    let max = beta_max(n);
    if !(0.0..=max).contains(&beta_target) {
        return Err(TopologyError::BetaOutOfRange {
            beta: beta_target,
            max,
        });
    }
    if beta_target <= case1_cutoff(n) {
        return complete_weight_matrix(n, beta_target);
    }
    // beta_target > cos(pi/9) forces cos(pi/n) > cos(pi/9), hence n >= 10.
    debug_assert!(n >= 10);
    let nf = n as f64;
    let denom = PI * PI * (1.0 - PI * PI / 12.0);
    let k = 2 * (nf * (3.0 * (1.0 - beta_target) / denom).sqrt()).ceil() as usize;
    debug_assert!(k >= 2 && k.is_multiple_of(2) && k < n - 1, "k-choice out of range: n={n} k={k}");
    lattice_weight_matrix(n, k, beta_target)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_doubly_stochastic(w: &WeightMatrix, tol: f64) {
        for (i, row) in w.entries().rows().into_iter().enumerate() {
            assert!((row.sum() - 1.0).abs() < tol, "row {i} sum {}", row.sum());
        }
        for (j, col) in w.entries().columns().into_iter().enumerate() {
            assert!((col.sum() - 1.0).abs() < tol, "col {j} sum {}", col.sum());
        }
    }

    #[test]
    fn zero_beta_yields_plain_averaging() {
        let w = construct_weight_matrix(16, 0.0).unwrap();
        assert!(w.graph().is_complete());
        for v in w.entries().iter() {
            assert!((v - 1.0 / 16.0).abs() < 1e-15);
        }
        assert!(w.beta() < 1e-10);
    }

    #[test]
    fn midrange_beta_stays_on_complete_graph() {
        // 0.5 < cos(pi/9) ~= 0.9397, so the complete graph wins
        let w = construct_weight_matrix(10, 0.5).unwrap();
        assert!(w.graph().is_complete());
        assert!((w.beta() - 0.5).abs() < 1e-10);
        assert_doubly_stochastic(&w, 1e-12);
    }

    #[test]
    fn top_of_range_beta_builds_a_lattice() {
        let n = 50;
        let beta = beta_max(n);
        let w = construct_weight_matrix(n, beta).unwrap();
        let k = w.graph().degree_count();
        assert!((2..n - 1).contains(&k), "k={k}");
        assert!((w.beta() - beta).abs() < 1e-8, "measured {}", w.beta());
        assert_doubly_stochastic(&w, 1e-12);
    }

    #[test]
    fn case2_example_from_the_proof_chain() {
        let w = construct_weight_matrix(50, 0.95).unwrap();
        assert!(!w.graph().is_complete());
        assert!((w.beta() - 0.95).abs() < 1e-8);
        // degree follows the k-choice expression
        assert_eq!(w.graph().degree_count(), 30);
    }

    #[test]
    fn out_of_range_betas_are_rejected() {
        assert!(construct_weight_matrix(16, -0.1).is_err());
        assert!(construct_weight_matrix(16, 0.9995).is_err()); // above cos(pi/16)
        assert!(construct_weight_matrix(16, 1.2).is_err());
    }

    #[test]
    fn lattice_matrix_rejects_infeasible_rescale() {
        // beta too small for a k=2 ring at n=12: rescale exceeds the PSD range
        assert!(matches!(
            lattice_weight_matrix(12, 2, 0.5),
            Err(TopologyError::InfeasibleRescale { .. })
        ));
        // near the top of the range it is fine
        let w = lattice_weight_matrix(12, 2, beta_max(12)).unwrap();
        assert!((w.beta() - beta_max(12)).abs() < 1e-8);
    }

    #[test]
    fn construction_sweep_invariants() {
        for n in [12usize, 20, 33] {
            let max = beta_max(n);
            for t in 0..8 {
                let beta = max * t as f64 / 7.0;
                let w = construct_weight_matrix(n, beta).unwrap();
                assert_doubly_stochastic(&w, 1e-12);
                assert!((w.beta() - beta).abs() < 1e-8, "n={n} beta={beta}");
                // symmetry
                for i in 0..n {
                    for j in 0..i {
                        assert!((w.entries()[[i, j]] - w.entries()[[j, i]]).abs() < 1e-15);
                    }
                }
                // sparsity respects the graph
                for i in 0..n {
                    for j in 0..n {
                        if i != j && !w.graph().neighbors(i).contains(&j) {
                            assert_eq!(w.entries()[[i, j]], 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let w = construct_weight_matrix(14, 0.97).unwrap();
        let mut buf = Vec::new();
        w.write_text(&mut buf).unwrap();
        let back = WeightMatrix::read_text(buf.as_slice()).unwrap();
        assert_eq!(back.n(), w.n());
        assert_eq!(back.graph().degree(), w.graph().degree());
        assert_eq!(back.beta(), w.beta());
        assert_eq!(back.entries(), w.entries());
    }

    #[test]
    fn read_text_reports_malformed_input() {
        let bad = "4 2\n"; // missing beta
        assert!(WeightMatrix::read_text(bad.as_bytes()).is_err());
        let bad = "4 2 0.9\n0 1 0\n"; // short row
        assert!(WeightMatrix::read_text(bad.as_bytes()).is_err());
    }
}
