//! Ring-lattice and complete graphs with closed-form metric properties.
//!
//! The ring lattice on `n` nodes with even degree `k` connects node `i` to
//! the `k/2` nearest nodes on each side of the cycle. Nodes are 0-based here;
//! the usual 1-based modular definition shifts every index by one and leaves
//! all distances unchanged.

use std::collections::VecDeque;

use super::{Result, TopologyError};

/// Degree tag: a proper ring lattice, or the complete graph treated as the
/// degenerate lattice of degree `n - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degree {
    Lattice(usize),
    Complete,
}

/// Undirected graph stored as sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    degree: Degree,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> Degree {
        self.degree
    }

    /// Lattice degree `k`, with the complete graph reported as `n - 1`.
    pub fn degree_count(&self) -> usize {
        match self.degree {
            Degree::Lattice(k) => k,
            Degree::Complete => self.n - 1,
        }
    }

    pub fn is_complete(&self) -> bool {
        matches!(self.degree, Degree::Complete)
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(TopologyError::NodeOutOfRange { index: i, n: self.n })
        }
    }
}

fn validate_lattice_params(n: usize, k: usize) -> Result<()> {
    if n < 4 {
        return Err(TopologyError::TooFewNodes { n, min: 4 });
    }
    if !k.is_multiple_of(2) {
        return Err(TopologyError::OddDegree { k });
    }
    if k < 2 || k >= n - 1 {
        return Err(TopologyError::DegreeOutOfRange { n, k });
    }
    Ok(())
}

/// Ring-lattice graph: node `i` is adjacent to `(i + l) mod n` for
/// `1 <= |l| <= k/2`. Requires even `k` with `2 <= k < n - 1`; the complete
/// graph has its own constructor.
pub fn ring_lattice(n: usize, k: usize) -> Result<Graph> {
    validate_lattice_params(n, k)?;
    let half = k / 2;
    let adj = (0..n)
        .map(|i| {
            let mut nbrs: Vec<usize> = (1..=half)
                .flat_map(|l| [(i + l) % n, (i + n - l) % n])
                .collect();
            nbrs.sort_unstable();
            nbrs.dedup();
            debug_assert_eq!(nbrs.len(), k);
            nbrs
        })
        .collect();
    Ok(Graph {
        n,
        degree: Degree::Lattice(k),
        adj,
    })
}

/// Complete graph on `n >= 2` nodes.
pub fn complete_graph(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(TopologyError::TooFewNodes { n, min: 2 });
    }
    let adj = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).collect())
        .collect();
    Ok(Graph {
        n,
        degree: Degree::Complete,
        adj,
    })
}

/// Closed-form shortest-path distance on a ring lattice:
/// `ceil(2 * min(|j-i|, n-|j-i|) / k)`.
pub fn distance(g: &Graph, i: usize, j: usize) -> Result<usize> {
    g.check_node(i)?;
    g.check_node(j)?;
    let k = match g.degree {
        Degree::Lattice(k) => k,
        Degree::Complete => return Err(TopologyError::NotLattice),
    };
    if i == j {
        return Ok(0);
    }
    let gap = i.abs_diff(j);
    let ring_gap = gap.min(g.n - gap);
    Ok((2 * ring_gap).div_ceil(k))
}

/// Breadth-first shortest-path distance on raw adjacency. Independent of the
/// closed form above; works on any graph produced by this module.
pub fn bfs_distance(g: &Graph, i: usize, j: usize) -> Result<usize> {
    g.check_node(i)?;
    g.check_node(j)?;
    if i == j {
        return Ok(0);
    }
    let mut dist = vec![usize::MAX; g.n];
    dist[i] = 0;
    let mut queue = VecDeque::from([i]);
    while let Some(u) = queue.pop_front() {
        for &v in g.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                if v == j {
                    return Ok(dist[v]);
                }
                queue.push_back(v);
            }
        }
    }
    // Every graph here is connected.
    unreachable!("disconnected graph")
}

/// Minimum BFS distance between two node sets.
pub fn set_distance(g: &Graph, a: &[usize], b: &[usize]) -> Result<usize> {
    if a.is_empty() || b.is_empty() {
        return Err(TopologyError::EmptyNodeSet);
    }
    let mut best = usize::MAX;
    for &i in a {
        for &j in b {
            best = best.min(bfs_distance(g, i, j)?);
        }
    }
    Ok(best)
}

/// Ring-lattice diameter in closed form: `ceil(2 * floor(n/2) / k)`.
pub fn diameter(n: usize, k: usize) -> Result<usize> {
    validate_lattice_params(n, k)?;
    Ok((2 * (n / 2)).div_ceil(k))
}

/// Exhaustive max-pair BFS diameter, used to cross-check the closed form.
pub fn bfs_diameter(g: &Graph) -> usize {
    let mut best = 0;
    for i in 0..g.n {
        // one BFS per source
        let mut dist = vec![usize::MAX; g.n];
        dist[i] = 0;
        let mut queue = VecDeque::from([i]);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    best = best.max(dist[v]);
                    queue.push_back(v);
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_adjacency_matches_definition() {
        // degree 2: plain ring
        let g = ring_lattice(10, 2).unwrap();
        assert_eq!(g.neighbors(0), &[1, 9]);
        assert_eq!(g.neighbors(5), &[4, 6]);

        // degree 4: two nearest on each side
        let g = ring_lattice(10, 4).unwrap();
        assert_eq!(g.neighbors(0), &[1, 2, 8, 9]);
        for i in 0..10 {
            assert_eq!(g.neighbors(i).len(), 4);
        }
    }

    #[test]
    fn adjacency_is_symmetric() {
        for (n, k) in [(10, 2), (10, 4), (11, 6), (16, 8)] {
            let g = ring_lattice(n, k).unwrap();
            for i in 0..n {
                for &j in g.neighbors(i) {
                    assert!(g.neighbors(j).contains(&i), "asymmetry at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn invalid_degrees_are_rejected() {
        assert!(ring_lattice(10, 3).is_err());
        assert!(ring_lattice(10, 0).is_err());
        assert!(ring_lattice(10, 9).is_err());
        assert!(ring_lattice(10, 10).is_err());
        assert!(ring_lattice(3, 2).is_err());
        assert!(ring_lattice(4, 2).is_ok());
    }

    #[test]
    fn complete_graph_has_all_pairs() {
        let g = complete_graph(10).unwrap();
        assert!(g.is_complete());
        assert_eq!(g.degree_count(), 9);
        for i in 0..10 {
            assert_eq!(g.neighbors(i).len(), 9);
            assert!(!g.neighbors(i).contains(&i));
        }
    }

    #[test]
    fn distance_examples() {
        let g = ring_lattice(10, 4).unwrap();
        // nodes 1 and 6 in 1-based labels
        assert_eq!(distance(&g, 0, 5).unwrap(), 3);
        assert_eq!(bfs_distance(&g, 0, 5).unwrap(), 3);
        assert_eq!(distance(&g, 7, 7).unwrap(), 0);

        let ring = ring_lattice(10, 2).unwrap();
        assert_eq!(distance(&ring, 0, 5).unwrap(), 5);
        assert_eq!(bfs_distance(&ring, 0, 5).unwrap(), 5);
    }

    #[test]
    fn distance_rejects_bad_nodes_and_complete_graphs() {
        let g = ring_lattice(10, 4).unwrap();
        assert!(distance(&g, 0, 10).is_err());
        let c = complete_graph(6).unwrap();
        assert!(distance(&c, 0, 1).is_err());
        assert_eq!(bfs_distance(&c, 0, 1).unwrap(), 1);
    }

    #[test]
    fn formula_distance_agrees_with_bfs_on_small_lattices() {
        for n in 4..=24 {
            for k in (2..n - 1).step_by(2) {
                let g = ring_lattice(n, k).unwrap();
                for i in 0..n {
                    for j in 0..n {
                        assert_eq!(
                            distance(&g, i, j).unwrap(),
                            bfs_distance(&g, i, j).unwrap(),
                            "mismatch at n={n} k={k} ({i},{j})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(diameter(10, 2).unwrap(), 5);
        assert_eq!(diameter(10, 4).unwrap(), 3);
        assert_eq!(diameter(12, 4).unwrap(), 3);
    }

    #[test]
    fn diameter_matches_bfs_on_small_lattices() {
        for n in 4..=24 {
            for k in (2..n - 1).step_by(2) {
                let g = ring_lattice(n, k).unwrap();
                assert_eq!(diameter(n, k).unwrap(), bfs_diameter(&g), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn set_distance_between_blocks() {
        let g = ring_lattice(12, 2).unwrap();
        // blocks used by the split instances at n = 12
        let e1 = [0, 1, 2, 3];
        let e2 = [6, 7, 8, 9];
        assert_eq!(set_distance(&g, &e1, &e2).unwrap(), 3);
    }
}
