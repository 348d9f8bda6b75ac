//! Generators for the dense regular test-bed families.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Graph, GraphError};

/// Complete graph K_n.
pub fn gen_complete(n: usize) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidParameter("K_n needs n >= 2".into()));
    }
    let adjacency = (0..n)
        .map(|v| (0..n as u32).filter(|&u| u as usize != v).collect())
        .collect();
    Graph::from_adjacency(adjacency)
}

/// Complete bipartite graph K_{m,m} with sides 0..m and m..2m.
pub fn gen_complete_bipartite(m: usize) -> Result<Graph, GraphError> {
    if m < 1 {
        return Err(GraphError::InvalidParameter("K_{m,m} needs m >= 1".into()));
    }
    let n = 2 * m;
    let adjacency = (0..n)
        .map(|v| {
            if v < m {
                (m as u32..n as u32).collect()
            } else {
                (0..m as u32).collect()
            }
        })
        .collect();
    Graph::from_adjacency(adjacency)
}

/// Circulant graph: node i adjacent to i±o mod n for each offset o. The
/// offset set is closed under negation before use, so `{1,2}` on n=8 yields
/// the same graph as `{1,2,6,7}`.
pub fn gen_circulant(n: usize, offsets: &[usize]) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidParameter(
            "circulant needs n >= 2".into(),
        ));
    }
    let mut closure = std::collections::BTreeSet::new();
    for &o in offsets {
        if o == 0 || o >= n {
            return Err(GraphError::InvalidParameter(format!(
                "offset {o} out of range 1..{n}"
            )));
        }
        closure.insert(o);
        closure.insert(n - o);
    }
    if closure.is_empty() {
        return Err(GraphError::InvalidParameter("no offsets given".into()));
    }
    let adjacency = (0..n)
        .map(|v| {
            let mut nbrs: Vec<u32> = closure.iter().map(|&o| ((v + o) % n) as u32).collect();
            nbrs.sort_unstable();
            nbrs.dedup();
            nbrs
        })
        .collect();
    Graph::from_adjacency(adjacency)
}

/// Random simple Δ-regular graph via the configuration model: stubs are
/// paired at random, rejecting pairs that would create a self-loop or a
/// parallel edge, restarting the attempt when no valid pair can be found.
/// Deterministic given the seed.
pub fn gen_random_regular(n: usize, delta: u32, seed: u64) -> Result<Graph, GraphError> {
    if n < 2 || delta as usize >= n {
        return Err(GraphError::InvalidParameter(format!(
            "need 2 <= n and delta < n, got n={n} delta={delta}"
        )));
    }
    if delta == 0 {
        return Err(GraphError::InvalidParameter("delta must be >= 1".into()));
    }
    if n * delta as usize % 2 != 0 {
        return Err(GraphError::InvalidParameter(format!(
            "n*delta must be even, got n={n} delta={delta}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const MAX_ATTEMPTS: u32 = 500;
    'attempt: for _ in 0..MAX_ATTEMPTS {
        let mut stubs: Vec<u32> = (0..n as u32)
            .flat_map(|v| std::iter::repeat(v).take(delta as usize))
            .collect();
        let mut adjacency: Vec<Vec<u32>> = vec![Vec::with_capacity(delta as usize); n];
        while !stubs.is_empty() {
            let mut paired = false;
            // A handful of retries per pair keeps the acceptance rate high
            // even for moderately dense degrees.
            for _ in 0..200 {
                let i = rng.gen_range(0..stubs.len());
                let j = rng.gen_range(0..stubs.len());
                if i == j {
                    continue;
                }
                let (u, v) = (stubs[i], stubs[j]);
                if u == v || adjacency[u as usize].contains(&v) {
                    continue;
                }
                adjacency[u as usize].push(v);
                adjacency[v as usize].push(u);
                // Swap-remove the larger index first so the smaller stays valid.
                stubs.swap_remove(i.max(j));
                stubs.swap_remove(i.min(j));
                paired = true;
                break;
            }
            if !paired {
                continue 'attempt;
            }
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        return Graph::from_adjacency(adjacency);
    }
    Err(GraphError::GenerationFailure {
        attempts: MAX_ATTEMPTS,
    })
}
