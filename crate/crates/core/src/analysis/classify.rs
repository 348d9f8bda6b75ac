//! Semi-saturated / critical node classification relative to a set S.
//!
//! At round t, a node is semi-saturated when its accepted incoming links
//! through round t−1 plus the requests it receives at t from nodes outside
//! S reach c·d/2; it is critical when it is not semi-saturated but its
//! accepted-plus-requested total at t exceeds c·d. Every rejected request
//! from S lands on one of the two kinds.

use std::collections::BTreeMap;

use super::{validate_proper_subset, AnalysisError};
use crate::graph::set_mask;
use crate::protocol::ExecutionTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectionClass {
    SemiSaturated,
    Critical,
}

/// Sorted class sets for one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundClasses {
    pub semi_saturated: Vec<u32>,
    pub critical: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct NodeClassification {
    /// Index t−1 holds round t.
    pub rounds: Vec<RoundClasses>,
    /// For each v ∈ S: the (round, class) of each of v's rejected requests,
    /// in tape order.
    pub rejected: BTreeMap<u32, Vec<(u32, RejectionClass)>>,
}

impl NodeClassification {
    pub fn c_t(&self, t: u32) -> usize {
        self.rounds[t as usize - 1].critical.len()
    }

    /// Rejected requests from v to critical nodes at round t.
    pub fn rc(&self, v: u32, t: u32) -> u32 {
        self.rejected
            .get(&v)
            .map(|list| {
                list.iter()
                    .filter(|&&(r, c)| r == t && c == RejectionClass::Critical)
                    .count() as u32
            })
            .unwrap_or(0)
    }

    /// Total rejected requests from v to semi-saturated nodes.
    pub fn rss(&self, v: u32) -> u32 {
        self.rejected
            .get(&v)
            .map(|list| {
                list.iter()
                    .filter(|&&(_, c)| c == RejectionClass::SemiSaturated)
                    .count() as u32
            })
            .unwrap_or(0)
    }
}

/// Classifies every round of the trace relative to `s_set`.
pub fn classify_nodes(
    trace: &ExecutionTrace,
    s_set: &[u32],
) -> Result<NodeClassification, AnalysisError> {
    let n = trace.n;
    validate_proper_subset(n, s_set)?;
    let in_s = set_mask(n, s_set)?;
    let cd = trace.params.cd;

    let mut accepted_in = vec![0u32; n]; // accepted incoming through t-1
    let mut rounds = Vec::with_capacity(trace.rounds.len());
    let mut rejected: BTreeMap<u32, Vec<(u32, RejectionClass)>> = BTreeMap::new();

    for (idx, round) in trace.rounds.iter().enumerate() {
        let t = idx as u32 + 1;
        let mut req_outside = vec![0u32; n]; // requests from V−S this round
        let mut req_total = vec![0u32; n];
        for q in &round.requests {
            req_total[q.to as usize] += 1;
            if !in_s[q.from as usize] {
                req_outside[q.to as usize] += 1;
            }
        }

        // Thresholds compared in integers: 2x >= cd and x > cd.
        let mut semi_saturated = Vec::new();
        let mut critical = Vec::new();
        for w in 0..n {
            let ss = 2 * (accepted_in[w] + req_outside[w]) >= cd;
            if ss {
                semi_saturated.push(w as u32);
            } else if accepted_in[w] + req_total[w] > cd {
                critical.push(w as u32);
            }
        }

        for q in &round.requests {
            if q.accepted || !in_s[q.from as usize] {
                continue;
            }
            let class = if semi_saturated.binary_search(&q.to).is_ok() {
                RejectionClass::SemiSaturated
            } else if critical.binary_search(&q.to).is_ok() {
                RejectionClass::Critical
            } else {
                return Err(AnalysisError::ClassificationViolation {
                    round: t,
                    from: q.from,
                    to: q.to,
                });
            };
            rejected.entry(q.from).or_default().push((t, class));
        }

        for q in &round.requests {
            if q.accepted {
                accepted_in[q.to as usize] += 1;
            }
        }
        rounds.push(RoundClasses {
            semi_saturated,
            critical,
        });
    }

    Ok(NodeClassification { rounds, rejected })
}

/// Checks the cardinality bounds |SS_t| ≤ 2n/c and |C_t| ≤ n/c, in exact
/// integers |SS_t|·cd ≤ 2·n·d and |C_t|·cd ≤ n·d.
pub fn class_bounds_hold(nc: &NodeClassification, n: usize, d: u32, cd: u32) -> bool {
    nc.rounds.iter().all(|r| {
        r.semi_saturated.len() as u64 * cd as u64 <= 2 * n as u64 * d as u64
            && r.critical.len() as u64 * cd as u64 <= n as u64 * d as u64
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{fixtures, run_raes, RaesOutcome};

    fn hand_classification() -> (NodeClassification, crate::protocol::ExecutionTrace) {
        let (g, params, tape) = fixtures::hand_instance();
        let trace = match run_raes(&g, &params, &tape).unwrap() {
            RaesOutcome::Terminated { trace, .. } => trace,
            _ => unreachable!(),
        };
        (classify_nodes(&trace, &[1, 2, 3]).unwrap(), trace)
    }

    #[test]
    fn hand_trace_round1() {
        let (nc, _) = hand_classification();
        // Node 1 receives node 0's request: 1 >= cd/2 = 0.5, semi-saturated.
        // Node 0 receives 3 requests > cd = 1 and is not semi-saturated.
        assert_eq!(nc.rounds[0].semi_saturated, vec![1]);
        assert_eq!(nc.rounds[0].critical, vec![0]);
        for v in [1, 2, 3] {
            assert_eq!(nc.rc(v, 1), 1);
        }
    }

    #[test]
    fn hand_trace_round2() {
        let (nc, _) = hand_classification();
        // Node 1 has one accepted link by end of round 1; no critical nodes.
        assert_eq!(nc.rounds[1].semi_saturated, vec![1]);
        assert!(nc.rounds[1].critical.is_empty());
        // Rejections 2->1 and 3->1 are both semi-saturated.
        assert_eq!(
            nc.rejected[&2],
            vec![
                (1, RejectionClass::Critical),
                (2, RejectionClass::SemiSaturated)
            ]
        );
    }

    #[test]
    fn hand_trace_round3_cumulative() {
        let (nc, _) = hand_classification();
        // Accepted incoming is cumulative, so both 1 (round 1) and 2
        // (round 2) are semi-saturated by round 3.
        assert_eq!(nc.rounds[2].semi_saturated, vec![1, 2]);
        assert!(nc.rounds[2].critical.is_empty());
        assert_eq!(
            nc.rejected[&3],
            vec![
                (1, RejectionClass::Critical),
                (2, RejectionClass::SemiSaturated),
                (3, RejectionClass::SemiSaturated)
            ]
        );
    }

    #[test]
    fn rejection_identity_and_bounds() {
        let (nc, trace) = hand_classification();
        // Σ_t rc_t(v) + rss(v) = ℓ_v − d for every v in S.
        for v in [1u32, 2, 3] {
            let rc_sum: u32 = (1..=4).map(|t| nc.rc(v, t)).sum();
            let expect = trace.requests_issued(v) as u32 - trace.params.d;
            assert_eq!(rc_sum + nc.rss(v), expect);
        }
        assert!(class_bounds_hold(&nc, trace.n, trace.params.d, trace.params.cd));
    }

    #[test]
    fn classification_on_random_runs() {
        use crate::graph::gen_complete;
        use crate::protocol::{fresh_tape, RaesParams};
        let g = gen_complete(16).unwrap();
        let params = RaesParams::new(2, 4, 32).unwrap();
        for seed in 0..20 {
            let out = run_raes(&g, &params, &fresh_tape(&g, &params, seed)).unwrap();
            let trace = out.trace();
            let s: Vec<u32> = (0..8).collect();
            let nc = classify_nodes(trace, &s).unwrap();
            assert!(class_bounds_hold(&nc, trace.n, params.d, params.cd));
            // Critical rounds obey Σ_v rc_t(v) > (cd/2)·c_t.
            for t in 1..=trace.rounds.len() as u32 {
                let c_t = nc.c_t(t) as u64;
                if c_t > 0 {
                    let rc_sum: u64 = s.iter().map(|&v| nc.rc(v, t) as u64).sum();
                    assert!(2 * rc_sum > params.cd as u64 * c_t);
                }
            }
        }
    }
}
