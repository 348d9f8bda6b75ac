//! The explicit randomness tape that makes the protocol deterministic.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ProtocolError, RaesParams};
use crate::graph::Graph;

/// Per-node sequence of exactly d·T neighbor-index draws, each in [0, Δ).
/// Draw i of node v addresses `g.neighbors(v)[draw]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomTape {
    n: usize,
    d: u32,
    max_rounds: u32,
    delta: u32,
    /// Row-major by node: draws[v * d * T .. (v+1) * d * T].
    draws: Vec<u32>,
}

impl RandomTape {
    pub fn new(
        n: usize,
        d: u32,
        max_rounds: u32,
        delta: u32,
        draws: Vec<u32>,
    ) -> Result<RandomTape, ProtocolError> {
        let expect = n * d as usize * max_rounds as usize;
        if draws.len() != expect {
            return Err(ProtocolError::TapeMismatch(format!(
                "tape has {} draws, expected n*d*T = {expect}",
                draws.len()
            )));
        }
        if let Some(&bad) = draws.iter().find(|&&x| x >= delta) {
            return Err(ProtocolError::TapeMismatch(format!(
                "draw {bad} out of range for delta={delta}"
            )));
        }
        Ok(RandomTape {
            n,
            d,
            max_rounds,
            delta,
            draws,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn max_rounds(&self) -> u32 {
        self.max_rounds
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }

    /// The d·T draws of node v.
    pub fn row(&self, v: u32) -> &[u32] {
        let len = self.d as usize * self.max_rounds as usize;
        &self.draws[v as usize * len..(v as usize + 1) * len]
    }

    pub fn draws(&self) -> &[u32] {
        &self.draws
    }

    /// Checks that the tape fits a (graph, params) pair.
    pub fn matches(&self, g: &Graph, params: &RaesParams) -> Result<(), ProtocolError> {
        if self.n != g.n() || self.delta != g.delta() {
            return Err(ProtocolError::TapeMismatch(format!(
                "tape built for n={} delta={}, graph has n={} delta={}",
                self.n,
                self.delta,
                g.n(),
                g.delta()
            )));
        }
        if self.d != params.d || self.max_rounds != params.max_rounds {
            return Err(ProtocolError::TapeMismatch(format!(
                "tape built for d={} T={}, params have d={} T={}",
                self.d, self.max_rounds, params.d, params.max_rounds
            )));
        }
        Ok(())
    }

    /// A copy restricted to the first `rounds`·d draws per node.
    pub fn truncated(&self, rounds: u32) -> RandomTape {
        let rounds = rounds.min(self.max_rounds);
        let keep = self.d as usize * rounds as usize;
        let full = self.d as usize * self.max_rounds as usize;
        let draws = (0..self.n)
            .flat_map(|v| self.draws[v * full..v * full + keep].iter().copied())
            .collect();
        RandomTape {
            n: self.n,
            d: self.d,
            max_rounds: rounds,
            delta: self.delta,
            draws,
        }
    }
}

/// Samples a fresh uniform tape for (g, params), deterministic in `seed`.
pub fn fresh_tape(g: &Graph, params: &RaesParams, seed: u64) -> RandomTape {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = g.n() * params.d as usize * params.max_rounds as usize;
    let delta = g.delta();
    let draws = (0..total).map(|_| rng.gen_range(0..delta)).collect();
    RandomTape {
        n: g.n(),
        d: params.d,
        max_rounds: params.max_rounds,
        delta,
        draws,
    }
}
