//! Regular graphs with a fixed global node ordering and sorted adjacency.
//!
//! The sorted adjacency order is normative: the codec numbers a node's
//! neighbors by their position in this order.

mod gen;
pub mod spectral;

pub use gen::{gen_circulant, gen_complete, gen_complete_bipartite, gen_random_regular};
pub use spectral::{second_eigenvalue, second_eigenvalue_serial, SpectralError, SpectralResult};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("graph generation failed after {attempts} attempts; reseed and retry")]
    GenerationFailure { attempts: u32 },
}

/// An undirected, simple, Δ-regular graph over nodes `0..n`.
///
/// Invariants enforced at construction: symmetry, no self-loops or duplicate
/// edges, every degree equal to `delta`, every adjacency list strictly
/// increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    delta: u32,
    adjacency: Vec<Vec<u32>>,
}

impl Graph {
    /// Builds a graph from adjacency lists, validating all invariants.
    pub fn from_adjacency(adjacency: Vec<Vec<u32>>) -> Result<Graph, GraphError> {
        let n = adjacency.len();
        if n < 2 {
            return Err(GraphError::InvalidParameter(
                "graph needs at least 2 nodes".into(),
            ));
        }
        let delta = adjacency[0].len() as u32;
        for (v, nbrs) in adjacency.iter().enumerate() {
            if nbrs.len() as u32 != delta {
                return Err(GraphError::InvalidParameter(format!(
                    "node {v} has degree {} but expected {delta}",
                    nbrs.len()
                )));
            }
            for w in nbrs.windows(2) {
                if w[0] >= w[1] {
                    return Err(GraphError::InvalidParameter(format!(
                        "adjacency of node {v} is not strictly increasing"
                    )));
                }
            }
            for &u in nbrs {
                if u as usize >= n {
                    return Err(GraphError::InvalidParameter(format!(
                        "node {v} lists out-of-range neighbor {u}"
                    )));
                }
                if u as usize == v {
                    return Err(GraphError::InvalidParameter(format!(
                        "node {v} has a self-loop"
                    )));
                }
            }
        }
        // Symmetry: u in adj[v] iff v in adj[u].
        for (v, nbrs) in adjacency.iter().enumerate() {
            for &u in nbrs {
                if adjacency[u as usize].binary_search(&(v as u32)).is_err() {
                    return Err(GraphError::InvalidParameter(format!(
                        "edge {v}-{u} is not symmetric"
                    )));
                }
            }
        }
        Ok(Graph { n, delta, adjacency })
    }

    /// Builds a graph from an undirected edge list.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Graph, GraphError> {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(GraphError::InvalidParameter(format!(
                    "edge ({u},{v}) out of range for n={n}"
                )));
            }
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Graph::from_adjacency(adjacency)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }

    /// Density ratio Δ/n.
    pub fn alpha(&self) -> f64 {
        self.delta as f64 / self.n as f64
    }

    /// Sorted neighbors of `v`; the position of a neighbor in this slice is
    /// its local number.
    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adjacency[v as usize]
    }

    /// All edges as (u, v) with u < v, sorted lexicographically.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.n * self.delta as usize / 2);
        for (v, nbrs) in self.adjacency.iter().enumerate() {
            for &u in nbrs {
                if (v as u32) < u {
                    out.push((v as u32, u));
                }
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::from([0u32]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }
}

/// Result of counting edges between two node sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutCount {
    /// Number of edges with one endpoint in U and the other in W; an edge
    /// inside the intersection is counted once.
    pub e_uw: u64,
}

/// Counts edges between `u_set` and `w_set` under the convention that
/// e(U, U) counts an edge with both endpoints in U once.
pub fn edge_count(g: &Graph, u_set: &[u32], w_set: &[u32]) -> Result<CutCount, GraphError> {
    let u_mask = set_mask(g.n(), u_set)?;
    let w_mask = set_mask(g.n(), w_set)?;
    let mut count = 0u64;
    for (v, nbrs) in g.adjacency.iter().enumerate() {
        for &u in nbrs {
            if (v as u32) < u {
                let a = u_mask[v] && w_mask[u as usize];
                let b = w_mask[v] && u_mask[u as usize];
                if a || b {
                    count += 1;
                }
            }
        }
    }
    Ok(CutCount { e_uw: count })
}

/// One-sided expander-mixing upper bound on e(S, S):
/// `(Δ·s²/n + λ⁺·s) / 2` with λ⁺ = max(λ₂, 0).
///
/// The clamp to λ⁺ makes the inequality hold verbatim for graphs with
/// negative second eigenvalue (e.g. complete graphs).
pub fn mixing_bound(g: &Graph, s_set: &[u32], lambda2_plus: f64) -> Result<f64, GraphError> {
    if s_set.is_empty() {
        return Err(GraphError::InvalidParameter("S must be nonempty".into()));
    }
    set_mask(g.n(), s_set)?;
    let s = s_set.len() as f64;
    let lambda_plus = lambda2_plus.max(0.0);
    Ok(0.5 * (g.delta() as f64 * s * s / g.n() as f64 + lambda_plus * s))
}

/// Validates a node set and returns its membership mask.
pub(crate) fn set_mask(n: usize, set: &[u32]) -> Result<Vec<bool>, GraphError> {
    let mut mask = vec![false; n];
    for &v in set {
        if v as usize >= n {
            return Err(GraphError::InvalidParameter(format!(
                "node {v} out of range for n={n}"
            )));
        }
        if mask[v as usize] {
            return Err(GraphError::InvalidParameter(format!(
                "duplicate node {v} in set"
            )));
        }
        mask[v as usize] = true;
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graph_shape() {
        let g = gen_complete(4).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.delta(), 3);
        assert_eq!(g.neighbors(0), &[1, 2, 3]);
        assert!((g.alpha() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn complete_graph_minimum() {
        let g = gen_complete(2).unwrap();
        assert_eq!(g.delta(), 1);
        assert_eq!(g.edges(), vec![(0, 1)]);
        assert!(gen_complete(1).is_err());
    }

    #[test]
    fn complete_graph_large_invariants() {
        let g = gen_complete(64).unwrap();
        assert_eq!(g.delta(), 63);
        // from_adjacency re-validation doubles as the invariant check.
        assert!(Graph::from_adjacency((0..64).map(|v| g.neighbors(v).to_vec()).collect()).is_ok());
    }

    #[test]
    fn edge_count_conventions() {
        let g = gen_complete(4).unwrap();
        assert_eq!(edge_count(&g, &[0, 1], &[0, 1]).unwrap().e_uw, 1);
        assert_eq!(edge_count(&g, &[0, 1], &[2, 3]).unwrap().e_uw, 4);
        let b = gen_complete_bipartite(3).unwrap();
        let left = [0, 1, 2];
        assert_eq!(edge_count(&b, &left, &left).unwrap().e_uw, 0);
        assert!(edge_count(&g, &[9], &[0]).is_err());
    }

    #[test]
    fn cut_volume_identity() {
        // e(U, V-U) + 2 e(U,U) = vol(U) for regular graphs.
        let g = gen_complete(6).unwrap();
        let u = [0, 2, 4];
        let rest = [1, 3, 5];
        let cross = edge_count(&g, &u, &rest).unwrap().e_uw;
        let inner = edge_count(&g, &u, &u).unwrap().e_uw;
        assert_eq!(cross + 2 * inner, g.delta() as u64 * u.len() as u64);
    }

    #[test]
    fn mixing_bound_examples() {
        let g = gen_complete(4).unwrap();
        // lambda2(K_4) = -1, clamped to 0.
        let bound = mixing_bound(&g, &[0, 1], 0.0).unwrap();
        assert!((bound - 1.5).abs() < 1e-12);
        assert!(edge_count(&g, &[0, 1], &[0, 1]).unwrap().e_uw as f64 <= bound);

        let b = gen_complete_bipartite(3).unwrap();
        let bound = mixing_bound(&b, &[0, 1, 2], 0.0).unwrap();
        assert!((bound - 2.25).abs() < 1e-12);

        // S = V: bound >= |E| since lambda_plus >= 0.
        let all: Vec<u32> = (0..4).collect();
        let bound = mixing_bound(&g, &all, 0.0).unwrap();
        assert!(bound >= g.edges().len() as f64);
    }

    #[test]
    fn rejects_malformed_adjacency() {
        // Asymmetric.
        assert!(Graph::from_adjacency(vec![vec![1], vec![0], vec![0]]).is_err());
        // Self-loop.
        assert!(Graph::from_adjacency(vec![vec![0], vec![0]]).is_err());
        // Unsorted.
        assert!(Graph::from_adjacency(vec![vec![2, 1], vec![0, 2], vec![0, 1]]).is_err());
    }
}
