//! Tape-driven simulation of the request/accept sparsification protocol.
//!
//! Each round has two phases. Phase 1: every node still missing outgoing
//! links draws that many neighbor indices from its tape row and submits one
//! request per draw. Phase 2: every recipient accepts all requests received
//! this round iff they fit in its remaining capacity c·d − d_in, otherwise
//! it rejects all of them. The run is a pure function of
//! (graph, params, tape).

mod tape;

pub use tape::{fresh_tape, RandomTape};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("tape mismatch: {0}")]
    TapeMismatch(String),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Protocol parameters. The capacity factor c is kept as the exact integer
/// capacity c·d together with d, so all threshold comparisons stay integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaesParams {
    /// Out-degree target d.
    pub d: u32,
    /// Integer capacity c·d.
    pub cd: u32,
    /// Round budget T.
    pub max_rounds: u32,
}

impl RaesParams {
    pub fn new(d: u32, cd: u32, max_rounds: u32) -> Result<RaesParams, ProtocolError> {
        if d < 1 || cd < 1 || max_rounds < 1 {
            return Err(ProtocolError::InvalidParams(format!(
                "need d >= 1, cd >= 1, T >= 1; got d={d} cd={cd} T={max_rounds}"
            )));
        }
        Ok(RaesParams { d, cd, max_rounds })
    }

    /// c = cd/d as a reduced fraction (numerator, denominator).
    pub fn c_fraction(&self) -> (u32, u32) {
        let g = gcd(self.cd, self.d);
        (self.cd / g, self.d / g)
    }

    pub fn c_value(&self) -> f64 {
        self.cd as f64 / self.d as f64
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// One link request and its phase-2 outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub from: u32,
    pub to: u32,
    pub accepted: bool,
}

/// Everything that happened in one round, with post-round degree snapshots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// Requests in (node, tape) order; a recipient's requests are
    /// all-accepted or all-rejected.
    pub requests: Vec<RequestRecord>,
    pub d_out: Vec<u32>,
    pub d_in: Vec<u32>,
}

/// Round-by-round record of an execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub params: RaesParams,
    pub n: usize,
    pub rounds: Vec<RoundRecord>,
    /// 1-based round at whose end every node reached out-degree d, if any.
    pub terminated_at: Option<u32>,
}

impl ExecutionTrace {
    /// Number of requests issued by `v` over the recorded rounds.
    pub fn requests_issued(&self, v: u32) -> u64 {
        self.rounds
            .iter()
            .flat_map(|r| &r.requests)
            .filter(|q| q.from == v)
            .count() as u64
    }
}

/// The sparsified multigraph: one undirected edge per accepted request,
/// with the requester and round retained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgraphH {
    pub n: usize,
    pub edges: Vec<HEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HEdge {
    pub requester: u32,
    pub dest: u32,
    pub round: u32,
}

impl SubgraphH {
    /// Degree counting parallel edges with multiplicity.
    pub fn degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.n];
        for e in &self.edges {
            deg[e.requester as usize] += 1;
            deg[e.dest as usize] += 1;
        }
        deg
    }

    /// Number of edges contributed by `v` as requester.
    pub fn out_contribution(&self, v: u32) -> u64 {
        self.edges.iter().filter(|e| e.requester == v).count() as u64
    }

    /// Adjacency with multiplicities, (neighbor, multiplicity) sorted by
    /// neighbor.
    pub fn multi_adjacency(&self) -> Vec<Vec<(u32, u32)>> {
        let mut adj: Vec<std::collections::BTreeMap<u32, u32>> =
            vec![std::collections::BTreeMap::new(); self.n];
        for e in &self.edges {
            *adj[e.requester as usize].entry(e.dest).or_insert(0) += 1;
            *adj[e.dest as usize].entry(e.requester).or_insert(0) += 1;
        }
        adj.into_iter().map(|m| m.into_iter().collect()).collect()
    }

    /// Copy with parallel edges collapsed to multiplicity one (keeping the
    /// record of the first occurrence).
    pub fn simplified(&self) -> SubgraphH {
        let mut seen = std::collections::HashSet::new();
        let edges = self
            .edges
            .iter()
            .filter(|e| seen.insert((e.requester.min(e.dest), e.requester.max(e.dest))))
            .copied()
            .collect();
        SubgraphH {
            n: self.n,
            edges,
        }
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let adj = self.multi_adjacency();
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adj[u] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    queue.push_back(v as usize);
                }
            }
        }
        count == self.n
    }
}

/// Aggregate counters for one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub rounds_used: u32,
    /// Σ_v ℓ_v, the total number of link requests.
    pub total_requests: u64,
    /// Requests plus their 1-bit replies.
    pub total_messages: u64,
    /// Unsettled links n·d − Σ_v d_out after each round.
    pub unsettled: Vec<u64>,
}

/// Outcome of a run: exhausting the round budget is a normal result, not an
/// error, so the codec can refuse it explicitly.
#[derive(Debug, Clone)]
pub enum RaesOutcome {
    Terminated {
        trace: ExecutionTrace,
        subgraph: SubgraphH,
        stats: RunStats,
    },
    NotTerminated {
        trace: ExecutionTrace,
    },
}

impl RaesOutcome {
    pub fn trace(&self) -> &ExecutionTrace {
        match self {
            RaesOutcome::Terminated { trace, .. } => trace,
            RaesOutcome::NotTerminated { trace } => trace,
        }
    }

    pub fn terminated(&self) -> bool {
        matches!(self, RaesOutcome::Terminated { .. })
    }
}

/// Runs the protocol to completion or until the round budget is exhausted.
pub fn run_raes(
    g: &Graph,
    params: &RaesParams,
    tape: &RandomTape,
) -> Result<RaesOutcome, ProtocolError> {
    tape.matches(g, params)?;
    let n = g.n();
    let d = params.d;
    let cd = params.cd;

    let mut d_out = vec![0u32; n];
    let mut d_in = vec![0u32; n];
    let mut consumed = vec![0u32; n];
    let mut rounds: Vec<RoundRecord> = Vec::new();
    let mut edges: Vec<HEdge> = Vec::new();
    let mut unsettled: Vec<u64> = Vec::new();
    let mut terminated_at = None;

    for t in 1..=params.max_rounds {
        // Phase 1: collect all requests before any decision.
        let requests = phase1(g, tape, d, &d_out, &mut consumed)?;

        // Phase 2: per-recipient all-or-nothing decisions.
        let mut received = vec![0u32; n];
        for &(_, to) in &requests {
            received[to as usize] += 1;
        }
        let accept: Vec<bool> = (0..n)
            .map(|w| received[w] > 0 && received[w] <= cd - d_in[w])
            .collect();

        let mut records = Vec::with_capacity(requests.len());
        for &(from, to) in &requests {
            let ok = accept[to as usize];
            if ok {
                d_out[from as usize] += 1;
                d_in[to as usize] += 1;
                edges.push(HEdge {
                    requester: from,
                    dest: to,
                    round: t,
                });
            }
            records.push(RequestRecord {
                from,
                to,
                accepted: ok,
            });
        }
        debug_assert!(d_in.iter().all(|&x| x <= cd));

        unsettled.push(n as u64 * d as u64 - d_out.iter().map(|&x| x as u64).sum::<u64>());
        rounds.push(RoundRecord {
            requests: records,
            d_out: d_out.clone(),
            d_in: d_in.clone(),
        });

        if d_out.iter().all(|&x| x == d) {
            terminated_at = Some(t);
            break;
        }
    }

    let trace = ExecutionTrace {
        params: *params,
        n,
        rounds,
        terminated_at,
    };
    match terminated_at {
        Some(t) => {
            let total_requests: u64 = consumed.iter().map(|&x| x as u64).sum();
            let stats = RunStats {
                rounds_used: t,
                total_requests,
                total_messages: 2 * total_requests,
                unsettled,
            };
            Ok(RaesOutcome::Terminated {
                trace,
                subgraph: SubgraphH { n, edges },
                stats,
            })
        }
        None => Ok(RaesOutcome::NotTerminated { trace }),
    }
}

/// Maps each unfinished node's pending draws to destinations, in (node,
/// tape) order. With the `parallel` feature nodes are evaluated in parallel;
/// the ordered collect keeps the result identical.
fn phase1(
    g: &Graph,
    tape: &RandomTape,
    d: u32,
    d_out: &[u32],
    consumed: &mut [u32],
) -> Result<Vec<(u32, u32)>, ProtocolError> {
    let map_node = |v: usize| -> Result<Vec<(u32, u32)>, ProtocolError> {
        let need = d - d_out[v];
        let start = consumed[v] as usize;
        let row = tape.row(v as u32);
        if start + need as usize > row.len() {
            return Err(ProtocolError::Internal(format!(
                "tape row of node {v} exhausted"
            )));
        }
        Ok(row[start..start + need as usize]
            .iter()
            .map(|&draw| (v as u32, g.neighbors(v as u32)[draw as usize]))
            .collect())
    };

    #[cfg(feature = "parallel")]
    let per_node: Result<Vec<Vec<(u32, u32)>>, ProtocolError> = {
        use rayon::prelude::*;
        (0..g.n())
            .into_par_iter()
            .filter(|&v| d_out[v] < d)
            .map(map_node)
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_node: Result<Vec<Vec<(u32, u32)>>, ProtocolError> = (0..g.n())
        .filter(|&v| d_out[v] < d)
        .map(map_node)
        .collect();

    let per_node = per_node?;
    for reqs in &per_node {
        if let Some(&(v, _)) = reqs.first() {
            consumed[v as usize] += reqs.len() as u32;
        }
    }
    Ok(per_node.into_iter().flatten().collect())
}

/// Unsettled links n·d − Σ_v d_out at the end of round `t`; `t = 0` refers
/// to the initial state.
pub fn unsettled_after(trace: &ExecutionTrace, t: u32) -> Result<u64, ProtocolError> {
    let nd = trace.n as u64 * trace.params.d as u64;
    if t == 0 {
        return Ok(nd);
    }
    let round = trace
        .rounds
        .get(t as usize - 1)
        .ok_or_else(|| ProtocolError::InvalidParams(format!("round {t} not recorded")))?;
    Ok(nd - round.d_out.iter().map(|&x| x as u64).sum::<u64>())
}

/// Shared fixture: K_4 with d = 1, c = 1, T = 4 and the 16-draw tape that
/// settles to the 4-cycle 0-1-2-3-0 in exactly four rounds, with request
/// counts (1, 2, 3, 4). Unused draws are zero.
#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::graph::gen_complete;

    pub(crate) fn hand_instance() -> (Graph, RaesParams, RandomTape) {
        let g = gen_complete(4).unwrap();
        let params = RaesParams::new(1, 1, 4).unwrap();
        let draws = vec![
            0, 0, 0, 0, // node 0: requests 1, then done
            0, 1, 0, 0, // node 1: requests 0, 2
            0, 1, 2, 0, // node 2: requests 0, 1, 3
            0, 1, 2, 0, // node 3: requests 0, 1, 2, 0
        ];
        let tape = RandomTape::new(g.n(), params.d, params.max_rounds, g.delta(), draws).unwrap();
        (g, params, tape)
    }
}
