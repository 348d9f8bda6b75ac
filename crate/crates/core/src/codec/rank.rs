//! Lexicographic subset ranking in the combinatorial number system, with
//! exact big-integer arithmetic.

use num_bigint::BigUint;
use num_traits::{One, Zero};

/// Binomial coefficient C(n, k) as a big integer.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut res = BigUint::one();
    for i in 1..=k {
        res = res * (n - k + i) / i;
    }
    res
}

/// log2 of C(n, k), exact up to float rounding; 0 when C(n,k) <= 1.
pub fn log2_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 0.0f64;
    for i in 1..=k {
        acc += ((n - k + i) as f64).log2() - (i as f64).log2();
    }
    acc.max(0.0)
}

/// Number of bits needed to store a rank in 0..count: ⌈log2 count⌉.
pub fn rank_width(count: &BigUint) -> usize {
    if count.is_zero() || count.is_one() {
        return 0;
    }
    (count - BigUint::one()).bits() as usize
}

/// Width of a value field addressing 0..count (e.g. a draw in [0, Δ)).
pub fn value_width(count: u64) -> usize {
    if count <= 1 {
        0
    } else {
        64 - (count - 1).leading_zeros() as usize
    }
}

/// Lexicographic rank of a strictly increasing k-subset of 0..n.
///
/// The scan keeps b = C(n−1−j, r−1) updated incrementally, so each call
/// performs O(n) exact big-integer operations.
pub fn subset_rank(n: usize, set: &[u32]) -> BigUint {
    let k = set.len();
    debug_assert!(set.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(set.iter().all(|&x| (x as usize) < n));
    debug_assert!(k <= n);
    if k == 0 {
        return BigUint::zero();
    }
    let mut rank = BigUint::zero();
    let mut r = k as u64; // subset slots still open, including position j
    let mut b = binomial(n as u64 - 1, k as u64 - 1);
    let mut next = 0usize; // index into `set`
    for j in 0..n {
        if r == 0 {
            break;
        }
        let m = (n - 1 - j) as u64; // b == C(m, r-1)
        let chosen = next < k && set[next] == j as u32;
        if chosen {
            next += 1;
            if r == 1 {
                break;
            }
            // b ← C(m-1, r-2) = b·(r-1)/m
            if m > 0 {
                b = b * (r - 1) / m;
            }
            r -= 1;
        } else {
            rank += &b;
            // b ← C(m-1, r-1) = b·(m-(r-1))/m
            if m > 0 {
                b = b * (m - (r - 1)) / m;
            }
        }
    }
    rank
}

/// Inverse of [`subset_rank`]: the `rank`-th k-subset of 0..n in
/// lexicographic order, or `None` when rank >= C(n, k).
pub fn subset_unrank(n: usize, k: usize, rank: &BigUint) -> Option<Vec<u32>> {
    if k > n {
        return None;
    }
    if *rank >= binomial(n as u64, k as u64) {
        return None;
    }
    let mut out = Vec::with_capacity(k);
    if k == 0 {
        return Some(out);
    }
    let mut rank = rank.clone();
    let mut r = k as u64;
    let mut b = binomial(n as u64 - 1, k as u64 - 1);
    for j in 0..n {
        if r == 0 {
            break;
        }
        let m = (n - 1 - j) as u64; // b == C(m, r-1)
        if rank < b {
            out.push(j as u32);
            if r == 1 {
                break;
            }
            if m > 0 {
                b = b * (r - 1) / m;
            }
            r -= 1;
        } else {
            rank -= &b;
            if m > 0 {
                b = b * (m - (r - 1)) / m;
            }
        }
    }
    debug_assert_eq!(out.len(), k);
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(4, 2), BigUint::from(6u32));
        assert_eq!(binomial(5, 0), BigUint::from(1u32));
        assert_eq!(binomial(5, 6), BigUint::zero());
        assert_eq!(binomial(64, 32).to_string(), "1832624140942590534");
    }

    #[test]
    fn widths() {
        assert_eq!(rank_width(&BigUint::from(1u32)), 0);
        assert_eq!(rank_width(&BigUint::from(4u32)), 2);
        assert_eq!(rank_width(&BigUint::from(5u32)), 3);
        assert_eq!(value_width(1), 0);
        assert_eq!(value_width(3), 2);
        assert_eq!(value_width(4), 2);
        assert_eq!(value_width(5), 3);
    }

    #[test]
    fn rank_examples() {
        // Subsets of size 2 of [4]: {0,1} {0,2} {0,3} {1,2} {1,3} {2,3}.
        assert_eq!(subset_rank(4, &[0, 1]), BigUint::zero());
        assert_eq!(subset_rank(4, &[0, 2]), BigUint::one());
        assert_eq!(subset_rank(4, &[2, 3]), BigUint::from(5u32));
        // Size-3 subsets of [4]: {1,2,3} is last.
        assert_eq!(subset_rank(4, &[1, 2, 3]), BigUint::from(3u32));
    }

    #[test]
    fn matches_lex_enumeration_oracle() {
        for n in 1..=9usize {
            for k in 0..=n {
                for (i, set) in raes_oracle::lex_subsets(n, k).iter().enumerate() {
                    assert_eq!(subset_rank(n, set), BigUint::from(i));
                    assert_eq!(
                        subset_unrank(n, k, &BigUint::from(i)).unwrap(),
                        set.clone()
                    );
                }
            }
        }
    }

    #[test]
    fn unrank_out_of_range() {
        assert!(subset_unrank(4, 2, &BigUint::from(6u32)).is_none());
        assert!(subset_unrank(4, 5, &BigUint::zero()).is_none());
    }

    #[test]
    fn log2_binomial_accuracy() {
        let exact = binomial(40, 12);
        let approx = log2_binomial(40, 12);
        let reference = exact.to_string().parse::<f64>().unwrap().log2();
        assert!((approx - reference).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn roundtrip_n40_k12(seed_set in proptest::collection::btree_set(0u32..40, 12)) {
            let set: Vec<u32> = seed_set.into_iter().collect();
            let rank = subset_rank(40, &set);
            prop_assert!(rank < binomial(40, 12));
            prop_assert_eq!(subset_unrank(40, 12, &rank).unwrap(), set);
        }

        #[test]
        fn roundtrip_large(universe in 2usize..200, pick in any::<u64>()) {
            let k = (pick % universe as u64) as usize;
            let set: Vec<u32> = (0..universe as u32).filter(|&x| (pick >> (x % 63)) & 1 == 1).take(k).collect();
            let k = set.len();
            let rank = subset_rank(universe, &set);
            prop_assert_eq!(subset_unrank(universe, k, &rank).unwrap(), set);
        }
    }
}
