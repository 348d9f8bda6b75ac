//! Measurements over executions: cut fractions of a set S, expansion of the
//! produced subgraph, semi-saturated/critical classification, and batch
//! experiment statistics.

mod classify;
mod expansion;
mod experiment;

pub use classify::{
    class_bounds_hold, classify_nodes, NodeClassification, RejectionClass, RoundClasses,
};
pub use expansion::{
    exact_expansion, exact_expansion_serial, exact_expansion_with_limit, sampled_expansion,
    spectral_expansion_lower_bound, ExpansionMethod, ExpansionReport, DEFAULT_EXHAUSTIVE_LIMIT,
};
pub use experiment::{
    run_experiment, run_experiment_serial, termination_round_bound, work_bound_factor,
    AnalysisMode, ExperimentConfig, Family, StatsRow, StatsTable,
};

use thiserror::Error;

use crate::graph::{set_mask, Graph};
use crate::protocol::{ExecutionTrace, SubgraphH};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid set: {0}")]
    InvalidSet(String),
    #[error("exact expansion limited to n <= {limit}, got n = {n}; use sampled or spectral mode")]
    SizeLimit { n: usize, limit: usize },
    #[error("classification violation at round {round}: rejected request {from}->{to} lands outside SS_t ∪ C_t")]
    ClassificationViolation { round: u32, from: u32, to: u32 },
    #[error("trace did not terminate")]
    NotTerminated,
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Protocol(#[from] crate::protocol::ProtocolError),
    #[error(transparent)]
    Spectral(#[from] crate::graph::SpectralError),
}

/// Per-node cut fractions of a set S: δ_v measures v's G-edges leaving S,
/// ε_v measures v's own accepted requests leaving S (with multiplicity).
#[derive(Debug, Clone)]
pub struct CutFractions {
    pub s: usize,
    pub delta_cap: u32,
    pub d: u32,
    /// (node, e_G(v, V−S), e_H^own(v, V−S)) for each v ∈ S in ascending order.
    pub per_node: Vec<(u32, u32, u32)>,
}

impl CutFractions {
    pub fn delta_v(&self, idx: usize) -> f64 {
        self.per_node[idx].1 as f64 / self.delta_cap as f64
    }

    pub fn eps_v(&self, idx: usize) -> f64 {
        self.per_node[idx].2 as f64 / self.d as f64
    }

    /// δ = (1/s) Σ δ_v.
    pub fn delta(&self) -> f64 {
        let sum: u64 = self.per_node.iter().map(|&(_, x, _)| x as u64).sum();
        sum as f64 / (self.s as f64 * self.delta_cap as f64)
    }

    /// ε = (1/s) Σ ε_v.
    pub fn eps(&self) -> f64 {
        let sum: u64 = self.per_node.iter().map(|&(_, _, x)| x as u64).sum();
        sum as f64 / (self.s as f64 * self.d as f64)
    }
}

/// Computes exact cut fractions for a terminated run.
///
/// ε_v counts only v's own accepted outgoing requests, not incoming links
/// from outside S.
pub fn cut_fractions(
    g: &Graph,
    h: &SubgraphH,
    trace: &ExecutionTrace,
    s_set: &[u32],
) -> Result<CutFractions, AnalysisError> {
    if trace.terminated_at.is_none() {
        return Err(AnalysisError::NotTerminated);
    }
    validate_proper_subset(g.n(), s_set)?;
    let mask = set_mask(g.n(), s_set)?;

    let mut sorted = s_set.to_vec();
    sorted.sort_unstable();
    let mut per_node = Vec::with_capacity(sorted.len());
    for &v in &sorted {
        let delta_out = g
            .neighbors(v)
            .iter()
            .filter(|&&u| !mask[u as usize])
            .count() as u32;
        let eps_out = h
            .edges
            .iter()
            .filter(|e| e.requester == v && !mask[e.dest as usize])
            .count() as u32;
        per_node.push((v, delta_out, eps_out));
    }
    if per_node.iter().all(|&(_, x, _)| x == 0) {
        return Err(AnalysisError::InvalidSet(
            "no G-edges leave S; S must be a proper subset of a connected graph".into(),
        ));
    }
    Ok(CutFractions {
        s: sorted.len(),
        delta_cap: g.delta(),
        d: trace.params.d,
        per_node,
    })
}

pub(crate) fn validate_proper_subset(n: usize, s_set: &[u32]) -> Result<(), AnalysisError> {
    if s_set.is_empty() {
        return Err(AnalysisError::InvalidSet("S must be nonempty".into()));
    }
    if s_set.len() >= n {
        return Err(AnalysisError::InvalidSet(
            "S must be a proper subset of V".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_circulant, gen_complete};
    use crate::protocol::{fixtures, fresh_tape, run_raes, RaesOutcome, RaesParams};

    #[test]
    fn delta_fractions_on_complete_graph() {
        let (g, params, tape) = fixtures::hand_instance();
        let out = run_raes(&g, &params, &tape).unwrap();
        let (h, trace) = match out {
            RaesOutcome::Terminated { subgraph, trace, .. } => (subgraph, trace),
            _ => unreachable!(),
        };
        // S = V - {0}: every v in S has exactly one neighbor outside.
        let cf = cut_fractions(&g, &h, &trace, &[1, 2, 3]).unwrap();
        for i in 0..3 {
            assert!((cf.delta_v(i) - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eps_fractions_on_hand_trace() {
        let (g, params, tape) = fixtures::hand_instance();
        let out = run_raes(&g, &params, &tape).unwrap();
        let (h, trace) = match out {
            RaesOutcome::Terminated { subgraph, trace, .. } => (subgraph, trace),
            _ => unreachable!(),
        };
        let cf = cut_fractions(&g, &h, &trace, &[1, 2, 3]).unwrap();
        // 1->2 and 2->3 stay inside S; 3->0 leaves.
        assert_eq!(cf.per_node, vec![(1, 1, 0), (2, 1, 0), (3, 1, 1)]);
        assert!((cf.eps() - 1.0 / 3.0).abs() < 1e-12);
        assert!((cf.eps_v(0) - 0.0).abs() < 1e-12);
        assert!((cf.eps_v(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_set_rejected() {
        // Disconnected circulant: offsets {4} on n=8 is a perfect matching,
        // so S = {0, 4} has no G-edges leaving it.
        let g = gen_circulant(8, &[4]).unwrap();
        let params = RaesParams::new(1, 1, 4).unwrap();
        let tape = fresh_tape(&g, &params, 0);
        if let RaesOutcome::Terminated { subgraph, trace, .. } =
            run_raes(&g, &params, &tape).unwrap()
        {
            let err = cut_fractions(&g, &subgraph, &trace, &[0, 4]);
            assert!(matches!(err, Err(AnalysisError::InvalidSet(_))));
        }
    }

    #[test]
    fn subset_validation() {
        let g = gen_complete(4).unwrap();
        assert!(validate_proper_subset(g.n(), &[]).is_err());
        assert!(validate_proper_subset(g.n(), &[0, 1, 2, 3]).is_err());
        assert!(validate_proper_subset(g.n(), &[0]).is_ok());
    }
}
