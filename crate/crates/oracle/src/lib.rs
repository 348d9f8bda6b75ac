//! Brute-force reference implementations used as independent oracles in tests.
//!
//! Everything here trades speed for obviousness: dense matrices, full
//! enumeration, no shared code with the library under test.

/// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations,
/// sorted in descending order.
pub fn jacobi_eigenvalues(matrix: &[Vec<f64>]) -> Vec<f64> {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    for (i, row) in a.iter().enumerate() {
        assert_eq!(row.len(), n, "matrix must be square");
        for j in 0..n {
            assert!(
                (row[j] - matrix[j][i]).abs() < 1e-12,
                "matrix must be symmetric"
            );
        }
    }

    let off = |a: &[Vec<f64>]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i][j] * a[i][j];
                }
            }
        }
        s
    };

    let mut sweeps = 0;
    while off(&a) > 1e-22 && sweeps < 200 {
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                // Classic 2x2 symmetric Schur decomposition.
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
        sweeps += 1;
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eig
}

/// Second-largest adjacency eigenvalue of a graph given as adjacency lists.
pub fn second_adjacency_eigenvalue(adjacency: &[Vec<u32>]) -> f64 {
    let n = adjacency.len();
    assert!(n >= 2);
    let mut m = vec![vec![0.0; n]; n];
    for (u, nbrs) in adjacency.iter().enumerate() {
        for &v in nbrs {
            m[u][v as usize] += 1.0;
        }
    }
    jacobi_eigenvalues(&m)[1]
}

/// Analytic second-largest adjacency eigenvalue of a circulant graph whose
/// offset set is closed under negation: eigenvalues are
/// `sum_{o in offsets} cos(2*pi*j*o/n)` for j = 0..n-1.
pub fn circulant_second_eigenvalue(n: usize, offsets: &[usize]) -> f64 {
    assert!(n >= 2);
    let mut best = f64::NEG_INFINITY;
    for j in 1..n {
        let lambda: f64 = offsets
            .iter()
            .map(|&o| (2.0 * std::f64::consts::PI * (j * o) as f64 / n as f64).cos())
            .sum();
        if lambda > best {
            best = lambda;
        }
    }
    best
}

/// A multigraph edge list with parallel edges repeated, as used by tests.
pub type MultiEdges = Vec<(u32, u32)>;

/// Exhaustive minimum of cut(U)/vol(U) over nonempty U with |U| <= n/2 and
/// vol(U) > 0, counting parallel edges with multiplicity. Returns the
/// minimum and the lexicographically smallest witness attaining it, or
/// `None` when no subset qualifies.
pub fn naive_min_expansion(n: usize, edges: &MultiEdges) -> Option<(f64, Vec<u32>)> {
    assert!(n <= 20, "oracle is exhaustive; keep n small");
    let mut deg = vec![0u64; n];
    for &(u, v) in edges {
        deg[u as usize] += 1;
        deg[v as usize] += 1;
    }
    let mut best: Option<(u64, u64, Vec<u32>)> = None; // (cut, vol, witness)
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size > n / 2 {
            continue;
        }
        let vol: u64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| deg[i]).sum();
        if vol == 0 {
            continue;
        }
        let cut: u64 = edges
            .iter()
            .filter(|&&(u, v)| (mask >> u & 1) != (mask >> v & 1))
            .count() as u64;
        let witness: Vec<u32> = (0..n as u32).filter(|&i| mask >> i & 1 == 1).collect();
        let better = match &best {
            None => true,
            Some((bc, bv, bw)) => {
                // Compare cut/vol exactly by cross-multiplication.
                match (cut * bv).cmp(&(bc * vol)) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Greater => false,
                    std::cmp::Ordering::Equal => witness < *bw,
                }
            }
        };
        if better {
            best = Some((cut, vol, witness));
        }
    }
    best.map(|(c, v, w)| (c as f64 / v as f64, w))
}

/// All k-subsets of 0..n in lexicographic order. Reference for rank/unrank.
pub fn lex_subsets(n: usize, k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur: Vec<u32> = Vec::with_capacity(k);
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in start..n {
            cur.push(x as u32);
            rec(n, k, x + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, k, 0, &mut cur, &mut out);
    out
}

/// Breadth-first connectivity check over an adjacency-list graph.
pub fn is_connected(adjacency: &[Vec<u32>]) -> bool {
    let n = adjacency.len();
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if !seen[v as usize] {
                seen[v as usize] = true;
                count += 1;
                queue.push_back(v as usize);
            }
        }
    }
    count == n
}
