//! Edge expansion of the produced multigraph: exact exhaustive minimum,
//! sampled upper bound, and a Cheeger-style spectral lower bound.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::graph::spectral::{power_iterate_deflated, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::protocol::SubgraphH;

/// Exhaustive enumeration budget: 2^24 subsets with O(deg) updates.
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionMethod {
    /// True minimum over all nonempty U with |U| <= n/2.
    Exact,
    /// Minimum over sampled subsets plus all singletons: an upper bound.
    Sampled,
    /// λ₂(normalized Laplacian)/2: a conductance lower bound.
    SpectralLowerBound,
}

/// Expansion measurement. Parallel edges count with multiplicity in both
/// the cut and the volume.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub epsilon_star: f64,
    /// A subset attaining the reported value (empty for the spectral bound).
    pub witness: Vec<u32>,
    pub method: ExpansionMethod,
    pub connected: bool,
    /// Cut and volume of the witness (zero for the spectral bound).
    pub cut: u64,
    pub vol: u64,
}

struct MultiCsr {
    adj: Vec<Vec<(u32, u32)>>,
    deg: Vec<u64>,
}

impl MultiCsr {
    fn new(h: &SubgraphH) -> MultiCsr {
        let adj = h.multi_adjacency();
        let deg = h.degrees();
        MultiCsr { adj, deg }
    }

    fn cut_and_vol(&self, members: &[u32]) -> (u64, u64) {
        let mut mask = vec![false; self.deg.len()];
        for &v in members {
            mask[v as usize] = true;
        }
        let mut cut = 0u64;
        let mut vol = 0u64;
        for &v in members {
            vol += self.deg[v as usize];
            for &(u, m) in &self.adj[v as usize] {
                if !mask[u as usize] {
                    cut += m as u64;
                }
            }
        }
        (cut, vol)
    }
}

/// Candidate subset with its exact cut/vol; ordering compares the fractions
/// exactly by cross-multiplication, breaking ties toward the
/// lexicographically smallest witness.
#[derive(Clone, Debug)]
struct Candidate {
    cut: u64,
    vol: u64,
    mask: u64,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        match (self.cut * other.vol).cmp(&(other.cut * self.vol)) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => mask_to_nodes(self.mask) < mask_to_nodes(other.mask),
        }
    }
}

fn mask_to_nodes(mask: u64) -> Vec<u32> {
    (0..64).filter(|&i| mask >> i & 1 == 1).collect()
}

fn merge(best: Option<Candidate>, cand: Candidate) -> Option<Candidate> {
    match best {
        None => Some(cand),
        Some(b) => {
            if cand.better_than(&b) {
                Some(cand)
            } else {
                Some(b)
            }
        }
    }
}

/// Exhaustive minimum of e(U, V−U)/vol(U) over nonempty U with |U| <= n/2,
/// visiting subsets in Gray-code order with O(deg) incremental updates.
pub fn exact_expansion(h: &SubgraphH) -> Result<ExpansionReport, AnalysisError> {
    exact_expansion_with_limit(h, DEFAULT_EXHAUSTIVE_LIMIT)
}

/// Sequential fallback of [`exact_expansion`].
pub fn exact_expansion_serial(h: &SubgraphH) -> Result<ExpansionReport, AnalysisError> {
    let csr = check_size(h, DEFAULT_EXHAUSTIVE_LIMIT)?;
    let best = scan_prefix(&csr, h.n, 0, h.n as u32);
    Ok(finish_exact(h, best))
}

pub fn exact_expansion_with_limit(
    h: &SubgraphH,
    limit: usize,
) -> Result<ExpansionReport, AnalysisError> {
    let csr = check_size(h, limit)?;
    let n = h.n;

    #[cfg(feature = "parallel")]
    let best = {
        use rayon::prelude::*;
        let prefix_bits: u32 = if n >= 16 { 8 } else { 0 };
        let low_bits = n as u32 - prefix_bits;
        (0u64..1 << prefix_bits)
            .into_par_iter()
            .map(|p| scan_prefix(&csr, n, p << low_bits, low_bits))
            .reduce(
                || None,
                |a, b| match (a, b) {
                    (None, x) | (x, None) => x,
                    (Some(a), Some(b)) => merge(Some(a), b),
                },
            )
    };
    #[cfg(not(feature = "parallel"))]
    let best = scan_prefix(&csr, n, 0, n as u32);

    Ok(finish_exact(h, best))
}

fn check_size(h: &SubgraphH, limit: usize) -> Result<MultiCsr, AnalysisError> {
    if h.n > limit.min(30) {
        return Err(AnalysisError::SizeLimit {
            n: h.n,
            limit: limit.min(30),
        });
    }
    Ok(MultiCsr::new(h))
}

/// Scans all masks `base | x` for x over `low_bits` Gray-coded bits,
/// returning the best candidate with 1 <= |U| <= n/2 and vol(U) > 0.
fn scan_prefix(csr: &MultiCsr, n: usize, base: u64, low_bits: u32) -> Option<Candidate> {
    let half = (n / 2) as u32;
    let mut in_set = vec![false; n];
    let mut cut = 0u64;
    let mut vol = 0u64;
    let mut size = 0u32;
    let mut best: Option<Candidate> = None;
    let mut mask = base;

    let flip = |x: usize, in_set: &mut Vec<bool>, cut: &mut u64, vol: &mut u64, size: &mut u32| {
        if in_set[x] {
            in_set[x] = false;
            *size -= 1;
            *vol -= csr.deg[x];
            for &(y, m) in &csr.adj[x] {
                if in_set[y as usize] {
                    *cut += m as u64;
                } else {
                    *cut -= m as u64;
                }
            }
        } else {
            in_set[x] = true;
            *size += 1;
            *vol += csr.deg[x];
            for &(y, m) in &csr.adj[x] {
                if in_set[y as usize] {
                    *cut -= m as u64;
                } else {
                    *cut += m as u64;
                }
            }
        }
    };

    for x in 0..n {
        if base >> x & 1 == 1 {
            flip(x, &mut in_set, &mut cut, &mut vol, &mut size);
        }
    }
    if size >= 1 && size <= half && vol > 0 {
        best = merge(best, Candidate { cut, vol, mask });
    }
    for i in 1u64..1 << low_bits {
        let x = i.trailing_zeros() as usize;
        flip(x, &mut in_set, &mut cut, &mut vol, &mut size);
        mask ^= 1 << x;
        if size >= 1 && size <= half && vol > 0 {
            if let Some(b) = &best {
                // Cheap reject before the exact comparison.
                if cut * b.vol > b.cut * vol {
                    continue;
                }
            }
            best = merge(best, Candidate { cut, vol, mask });
        }
    }
    best
}

fn finish_exact(h: &SubgraphH, best: Option<Candidate>) -> ExpansionReport {
    let connected = h.is_connected();
    match best {
        Some(c) => ExpansionReport {
            epsilon_star: c.cut as f64 / c.vol as f64,
            witness: mask_to_nodes(c.mask),
            method: ExpansionMethod::Exact,
            connected,
            cut: c.cut,
            vol: c.vol,
        },
        None => ExpansionReport {
            epsilon_star: 0.0,
            witness: Vec::new(),
            method: ExpansionMethod::Exact,
            connected,
            cut: 0,
            vol: 0,
        },
    }
}

/// Upper bound on the exact minimum: best of `trials` random subsets
/// (uniform size in 1..=n/2, uniform membership) plus all singletons.
pub fn sampled_expansion(
    h: &SubgraphH,
    trials: u32,
    seed: u64,
) -> Result<ExpansionReport, AnalysisError> {
    if trials < 1 {
        return Err(AnalysisError::InvalidSet("trials must be >= 1".into()));
    }
    let csr = MultiCsr::new(h);
    let n = h.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(u64, u64, Vec<u32>)> = None;

    let consider = |members: &[u32], best: &mut Option<(u64, u64, Vec<u32>)>| {
        if members.is_empty() || members.len() > n / 2 {
            return;
        }
        let (cut, vol) = csr.cut_and_vol(members);
        if vol == 0 {
            return;
        }
        let better = match best {
            None => true,
            Some((bc, bv, bw)) => match (cut * *bv).cmp(&(*bc * vol)) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => members < bw.as_slice(),
            },
        };
        if better {
            *best = Some((cut, vol, members.to_vec()));
        }
    };

    for v in 0..n as u32 {
        consider(&[v], &mut best);
    }
    let mut pool: Vec<u32> = (0..n as u32).collect();
    for _ in 0..trials {
        let k = rng.gen_range(1..=(n / 2).max(1));
        pool.shuffle(&mut rng);
        let mut members: Vec<u32> = pool[..k].to_vec();
        members.sort_unstable();
        consider(&members, &mut best);
    }

    let connected = h.is_connected();
    Ok(match best {
        Some((cut, vol, witness)) => ExpansionReport {
            epsilon_star: cut as f64 / vol as f64,
            witness,
            method: ExpansionMethod::Sampled,
            connected,
            cut,
            vol,
        },
        None => ExpansionReport {
            epsilon_star: 0.0,
            witness: Vec::new(),
            method: ExpansionMethod::Sampled,
            connected,
            cut: 0,
            vol: 0,
        },
    })
}

/// Cheeger-style lower bound λ₂(normalized Laplacian)/2. This bounds the
/// conductance cut/min(vol(U), vol(V−U)), reported here as `epsilon_star`;
/// for a disconnected H the report is 0 with the flag cleared.
pub fn spectral_expansion_lower_bound(h: &SubgraphH) -> Result<ExpansionReport, AnalysisError> {
    if !h.is_connected() {
        return Ok(ExpansionReport {
            epsilon_star: 0.0,
            witness: Vec::new(),
            method: ExpansionMethod::SpectralLowerBound,
            connected: false,
            cut: 0,
            vol: 0,
        });
    }
    let csr = MultiCsr::new(h);
    let n = h.n;
    let inv_sqrt_deg: Vec<f64> = csr.deg.iter().map(|&d| 1.0 / (d as f64).sqrt()).collect();
    let vol_total: f64 = csr.deg.iter().map(|&d| d as f64).sum();
    // Unit top eigenvector of the normalized adjacency: D^{1/2}·1 / sqrt(vol).
    let deflate: Vec<f64> = csr
        .deg
        .iter()
        .map(|&d| (d as f64).sqrt() / vol_total.sqrt())
        .collect();
    // Operator M + I with M = D^{-1/2} A D^{-1/2}; spectrum in [0, 2].
    let matvec = |x: &[f64], y: &mut [f64]| {
        for v in 0..n {
            let mut acc = 0.0;
            for &(u, m) in &csr.adj[v] {
                acc += m as f64 * inv_sqrt_deg[u as usize] * x[u as usize];
            }
            y[v] = acc * inv_sqrt_deg[v] + x[v];
        }
    };
    let raw = power_iterate_deflated(n, &deflate, matvec, DEFAULT_TOL, DEFAULT_MAX_ITERS)?;
    let lambda2_m = raw.theta - 1.0;
    let bound = (1.0 - lambda2_m) / 2.0;
    Ok(ExpansionReport {
        epsilon_star: bound,
        witness: Vec::new(),
        method: ExpansionMethod::SpectralLowerBound,
        connected: true,
        cut: 0,
        vol: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::HEdge;

    fn h_from_pairs(n: usize, pairs: &[(u32, u32)]) -> SubgraphH {
        SubgraphH {
            n,
            edges: pairs
                .iter()
                .map(|&(a, b)| HEdge {
                    requester: a,
                    dest: b,
                    round: 1,
                })
                .collect(),
        }
    }

    fn four_cycle() -> SubgraphH {
        h_from_pairs(4, &[(0, 1), (1, 2), (2, 3), (3, 0)])
    }

    fn k4() -> SubgraphH {
        h_from_pairs(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
    }

    #[test]
    fn exact_on_cycle() {
        let r = exact_expansion(&four_cycle()).unwrap();
        assert!((r.epsilon_star - 0.5).abs() < 1e-12);
        assert_eq!(r.witness, vec![0, 1]);
        assert!(r.connected);
    }

    #[test]
    fn exact_on_k4() {
        let r = exact_expansion(&k4()).unwrap();
        assert!((r.epsilon_star - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.witness.len(), 2);
    }

    #[test]
    fn exact_on_single_edge() {
        let r = exact_expansion(&h_from_pairs(2, &[(0, 1)])).unwrap();
        assert!((r.epsilon_star - 1.0).abs() < 1e-12);
    }

    #[test]
    fn size_limit() {
        let h = SubgraphH {
            n: 30,
            edges: vec![],
        };
        assert!(matches!(
            exact_expansion(&h),
            Err(AnalysisError::SizeLimit { .. })
        ));
    }

    #[test]
    fn serial_matches_parallel() {
        let h = k4();
        let a = exact_expansion(&h).unwrap();
        let b = exact_expansion_serial(&h).unwrap();
        assert_eq!(a.epsilon_star, b.epsilon_star);
        assert_eq!(a.witness, b.witness);
    }

    #[test]
    fn matches_naive_oracle() {
        // Multigraph with parallel edges.
        let h = h_from_pairs(6, &[(0, 1), (0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (2, 5)]);
        let r = exact_expansion(&h).unwrap();
        let pairs: Vec<(u32, u32)> = h.edges.iter().map(|e| (e.requester, e.dest)).collect();
        let (eps, witness) = raes_oracle::naive_min_expansion(6, &pairs).unwrap();
        assert!((r.epsilon_star - eps).abs() < 1e-12);
        assert_eq!(r.witness, witness);
    }

    #[test]
    fn sampled_is_upper_bound() {
        let h = four_cycle();
        let exact = exact_expansion(&h).unwrap();
        let sampled = sampled_expansion(&h, 1000, 9).unwrap();
        assert!(sampled.epsilon_star >= exact.epsilon_star - 1e-12);
        assert!(sampled.epsilon_star <= 1.0);
        // Enough trials on a tiny graph reach the exact value.
        assert!((sampled.epsilon_star - exact.epsilon_star).abs() < 1e-12);
    }

    #[test]
    fn disconnected_h() {
        let h = h_from_pairs(4, &[(0, 1), (2, 3)]);
        let exact = exact_expansion(&h).unwrap();
        assert_eq!(exact.epsilon_star, 0.0);
        assert!(!exact.connected);
        let sampled = sampled_expansion(&h, 200, 1).unwrap();
        assert_eq!(sampled.epsilon_star, 0.0);
        let spectral = spectral_expansion_lower_bound(&h).unwrap();
        assert_eq!(spectral.epsilon_star, 0.0);
        assert!(!spectral.connected);
    }

    #[test]
    fn spectral_bounds() {
        // K_4: normalized Laplacian λ₂ = 4/3, bound 2/3.
        let r = spectral_expansion_lower_bound(&k4()).unwrap();
        assert!((r.epsilon_star - 2.0 / 3.0).abs() < 1e-8);
        // 4-cycle: λ₂ = 1, bound 1/2 equals the true expansion.
        let r = spectral_expansion_lower_bound(&four_cycle()).unwrap();
        assert!((r.epsilon_star - 0.5).abs() < 1e-8);
    }
}
