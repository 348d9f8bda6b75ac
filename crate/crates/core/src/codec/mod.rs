//! Lossless compressed encoding of execution randomness.
//!
//! An execution that terminates within T rounds is a pure function of the
//! n·d·T neighbor draws on the tape. Given a set S, the stream stores:
//! the set itself by combinatorial rank (Table 1); the per-round critical
//! sets (Table 3); the raw rows of nodes outside S (Table 2, upper part);
//! and per node in S the accepted-request positions (Field 1), which of
//! those leave S (Field 2), accepted destinations — raw when leaving S,
//! ranked in the in-S neighbor sublist otherwise (Field 3), rejected
//! destinations ranked inside the per-round semi-saturated or critical sets
//! (Field 4), and the unused tail of the row (Field 5). The decoder replays
//! the protocol round by round, reconstructing the semi-saturated sets from
//! history, and recovers the tape bit-exactly.
//!
//! Stored section order: Table 1, Table 3, Table 2 upper, then Fields 1-5
//! column-wise (each field for all of S), with Field-4 destination ranks
//! interleaved globally in replay order. Every length a reader needs is
//! derivable from earlier sections, so the stream is self-delimiting.

mod bits;
mod cost;
mod decode;
mod encode;
mod rank;
mod witness;

pub use bits::{gamma_len, BitCursor, Bits, BitsError};
pub use cost::{savings_expression, CostReport, SectionCost, Sections, TheoremHypotheses};
pub use decode::decode_execution;
pub use encode::{cost_report, encode_execution};
pub use rank::{binomial, log2_binomial, rank_width, subset_rank, subset_unrank, value_width};
pub use witness::{decode_termination_witness, encode_termination_witness, WitnessTape};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("execution did not terminate within the round budget; only terminated executions are encoded")]
    NotTerminated,
    #[error("invalid set: {0}")]
    InvalidSet(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("decode error in {section}: {detail}")]
    Decode {
        section: &'static str,
        detail: String,
    },
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Analysis(#[from] crate::analysis::AnalysisError),
    #[error(transparent)]
    Protocol(#[from] crate::protocol::ProtocolError),
}

pub(crate) fn decode_err(section: &'static str, detail: impl Into<String>) -> CodecError {
    CodecError::Decode {
        section,
        detail: detail.into(),
    }
}

/// The nine stored sections, in stream order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Section {
    Table1,
    Table3,
    Table2Upper,
    Field1,
    Field2,
    Field3,
    Field4Cats,
    Field4Ranks,
    Field5,
}

pub const SECTIONS: [Section; 9] = [
    Section::Table1,
    Section::Table3,
    Section::Table2Upper,
    Section::Field1,
    Section::Field2,
    Section::Field3,
    Section::Field4Cats,
    Section::Field4Ranks,
    Section::Field5,
];

impl Section {
    pub fn name(self) -> &'static str {
        match self {
            Section::Table1 => "table1",
            Section::Table3 => "table3",
            Section::Table2Upper => "table2-upper",
            Section::Field1 => "field1",
            Section::Field2 => "field2",
            Section::Field3 => "field3",
            Section::Field4Cats => "field4-cats",
            Section::Field4Ranks => "field4-ranks",
            Section::Field5 => "field5",
        }
    }

    fn index(self) -> usize {
        SECTIONS.iter().position(|&s| s == self).unwrap()
    }
}

/// Bit offsets of the section boundaries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionTable {
    /// starts[i] is the first bit of SECTIONS[i]; `end` is the stream length.
    pub starts: [usize; 9],
    pub end: usize,
}

impl SectionTable {
    pub fn bits(&self, s: Section) -> usize {
        let i = s.index();
        let stop = if i + 1 < 9 {
            self.starts[i + 1]
        } else {
            self.end
        };
        stop - self.starts[i]
    }

    /// Sections partition the stream exactly; their sizes sum to its length.
    pub fn total_bits(&self) -> usize {
        self.end - self.starts[0]
    }
}

/// Fixed-size description prepended to the stream when stored as a file:
/// node count, draw width w = ⌈log₂Δ⌉, d, c·d, round budget T and |S|.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingHeader {
    pub n: u32,
    pub w: u32,
    pub d: u32,
    pub cd: u32,
    pub t_max: u32,
    pub s: u32,
}

/// A complete encoding: header plus bitstream. The section table is
/// available when produced by the encoder; a stream read back from a file
/// is decoded without it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedEncoding {
    pub header: EncodingHeader,
    pub bits: Bits,
    pub sections: Option<SectionTable>,
}

/// Per-node view of an S-row shared by the encoder and the cost ledger.
#[derive(Debug, Clone)]
pub(crate) struct SRow {
    pub v: u32,
    /// Requests issued by v, tape order: (round, destination, accepted).
    pub requests: Vec<(u32, u32, bool)>,
    /// 0-based positions (within the ℓ_v requests) that were accepted.
    pub accepted_positions: Vec<u32>,
    /// 0-based positions within the accepted subsequence whose destination
    /// leaves S.
    pub out_positions: Vec<u32>,
    /// v's neighbors inside S, sorted (the codec's local numbering).
    pub in_s_neighbors: Vec<u32>,
}

impl SRow {
    pub fn ell(&self) -> u32 {
        self.requests.len() as u32
    }

    pub fn eps_d(&self) -> u32 {
        self.out_positions.len() as u32
    }

    pub fn deg_s(&self) -> u32 {
        self.in_s_neighbors.len() as u32
    }
}

/// Builds the S-row views from a terminated trace.
pub(crate) fn build_s_rows(
    g: &crate::graph::Graph,
    trace: &crate::protocol::ExecutionTrace,
    s_sorted: &[u32],
    in_s: &[bool],
) -> Result<Vec<SRow>, CodecError> {
    let d = trace.params.d;
    let mut rows: Vec<SRow> = s_sorted
        .iter()
        .map(|&v| SRow {
            v,
            requests: Vec::new(),
            accepted_positions: Vec::new(),
            out_positions: Vec::new(),
            in_s_neighbors: g
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&u| in_s[u as usize])
                .collect(),
        })
        .collect();
    let index_of: std::collections::HashMap<u32, usize> = s_sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .collect();

    for (idx, round) in trace.rounds.iter().enumerate() {
        let t = idx as u32 + 1;
        for q in &round.requests {
            if let Some(&i) = index_of.get(&q.from) {
                rows[i].requests.push((t, q.to, q.accepted));
            }
        }
    }
    for row in &mut rows {
        for (pos, &(_, dest, accepted)) in row.requests.iter().enumerate() {
            if accepted {
                if !in_s[dest as usize] {
                    row.out_positions.push(row.accepted_positions.len() as u32);
                }
                row.accepted_positions.push(pos as u32);
            }
        }
        if row.accepted_positions.len() != d as usize {
            return Err(CodecError::Internal(format!(
                "node {} has {} accepted requests, expected d = {d}",
                row.v,
                row.accepted_positions.len()
            )));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::class_bounds_hold;
    use crate::protocol::{fixtures, fresh_tape, run_raes, RaesOutcome, RaesParams, RandomTape};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bit_string(b: &Bits, range: std::ops::Range<usize>) -> String {
        range
            .map(|i| if b.get(i).unwrap() { '1' } else { '0' })
            .collect()
    }

    fn hand_encoding() -> (
        crate::graph::Graph,
        RaesParams,
        RandomTape,
        crate::protocol::ExecutionTrace,
        CompressedEncoding,
        CostReport,
    ) {
        let (g, params, tape) = fixtures::hand_instance();
        let trace = match run_raes(&g, &params, &tape).unwrap() {
            RaesOutcome::Terminated { trace, .. } => trace,
            _ => unreachable!(),
        };
        let (enc, report) =
            encode_execution(&g, &params, &tape, &trace, &[1, 2, 3]).unwrap();
        (g, params, tape, trace, enc, report)
    }

    #[test]
    fn hand_vector_field_contents() {
        let (_, _, _, _, enc, _) = hand_encoding();
        let sections = enc.sections.as_ref().unwrap();

        // Table 1: gamma(3) = "011", then S = {1,2,3} is the last of the
        // four 3-subsets of [4]: rank 3 in 2 bits.
        assert_eq!(sections.bits(Section::Table1), 5);
        assert_eq!(bit_string(&enc.bits, 0..5), "01111");

        // Table 3: round 1 has C_1 = {0} (gamma(2) + 2-bit rank 0), rounds
        // 2-4 are critical-free (gamma(1), zero-width rank).
        assert_eq!(sections.bits(Section::Table3), 8);
        assert_eq!(bit_string(&enc.bits, 5..13), "01000111");

        // Upper rows: node 0's four draws, two bits each.
        assert_eq!(sections.bits(Section::Table2Upper), 8);

        // Field 1: gamma(ℓ) plus the rank of the accepted position:
        // ℓ = (2,3,4), accepted always last, ranks (1, 2, 3).
        assert_eq!(sections.bits(Section::Field1), (3 + 1) + (3 + 2) + (5 + 2));

        // Field 2: ε·d = (0, 0, 1): gamma(1), gamma(1), gamma(2) with all
        // rank widths zero.
        assert_eq!(sections.bits(Section::Field2), 1 + 1 + 3);

        // Field 3: two in-S destinations at one bit each (deg_S = 2) and
        // one raw draw at w = 2 bits.
        assert_eq!(sections.bits(Section::Field3), 1 + 1 + 2);

        // Field 4 categories: [1], [1,0], [1,0,0] in tape order.
        assert_eq!(sections.bits(Section::Field4Cats), 6);
        let cats_start = sections.starts[6];
        assert_eq!(
            bit_string(&enc.bits, cats_start..cats_start + 6),
            "110100"
        );

        // Field 4 ranks: rounds 1-2 address singleton sets (zero bits);
        // round 3 ranks node 2 inside SS_3 = {1, 2}: one bit, value 1.
        assert_eq!(sections.bits(Section::Field4Ranks), 1);
        let ranks_start = sections.starts[7];
        assert_eq!(bit_string(&enc.bits, ranks_start..ranks_start + 1), "1");

        // Field 5: unused draws 2 + 1 + 0, two bits each.
        assert_eq!(sections.bits(Section::Field5), 6);

        assert_eq!(enc.bits.len(), 5 + 8 + 8 + 16 + 5 + 4 + 6 + 1 + 6);
        assert_eq!(enc.header.s, 3);
        assert_eq!(enc.header.w, 2);
    }

    #[test]
    fn hand_vector_roundtrip() {
        let (g, _, tape, trace, enc, _) = hand_encoding();
        let (tape2, trace2) = decode_execution(&g, &enc).unwrap();
        assert_eq!(tape2, tape);
        assert_eq!(trace2, trace);
    }

    #[test]
    fn decode_without_section_table() {
        let (g, _, tape, _, enc, _) = hand_encoding();
        let stripped = CompressedEncoding {
            header: enc.header,
            bits: enc.bits.clone(),
            sections: None,
        };
        let (tape2, _) = decode_execution(&g, &stripped).unwrap();
        assert_eq!(tape2, tape);
    }

    #[test]
    fn single_node_set_all_raw() {
        let (g, params, tape) = fixtures::hand_instance();
        let trace = match run_raes(&g, &params, &tape).unwrap() {
            RaesOutcome::Terminated { trace, .. } => trace,
            _ => unreachable!(),
        };
        // S = {3}: the single accepted request necessarily leaves S, so
        // Field 3 is entirely raw.
        let (enc, report) = encode_execution(&g, &params, &tape, &trace, &[3]).unwrap();
        assert!((report.eps - 1.0).abs() < 1e-12);
        let sections = enc.sections.as_ref().unwrap();
        assert_eq!(sections.bits(Section::Field3), 2);
        let (tape2, _) = decode_execution(&g, &enc).unwrap();
        assert_eq!(tape2, tape);
    }

    #[test]
    fn rejects_invalid_sets_and_not_terminated() {
        let (g, params, tape) = fixtures::hand_instance();
        let trace = match run_raes(&g, &params, &tape).unwrap() {
            RaesOutcome::Terminated { trace, .. } => trace,
            _ => unreachable!(),
        };
        assert!(matches!(
            encode_execution(&g, &params, &tape, &trace, &[]),
            Err(CodecError::InvalidSet(_))
        ));
        assert!(matches!(
            encode_execution(&g, &params, &tape, &trace, &[0, 1, 2, 3]),
            Err(CodecError::InvalidSet(_))
        ));

        let short = RaesParams::new(1, 1, 1).unwrap();
        let tape1 = RandomTape::new(4, 1, 1, 3, vec![0, 0, 0, 0]).unwrap();
        let out = run_raes(&g, &short, &tape1).unwrap();
        let not_term = out.trace().clone();
        assert!(matches!(
            encode_execution(&g, &short, &tape1, &not_term, &[1]),
            Err(CodecError::NotTerminated)
        ));
    }

    #[test]
    fn corrupted_table3_is_named() {
        let (g, _, _, _, enc, _) = hand_encoding();
        // Keep Table 1 (first 5 bits), then claim c_1 + 1 = 6, i.e. a
        // critical set larger than the graph.
        let mut bits = Bits::new();
        for i in 0..5 {
            bits.push(enc.bits.get(i).unwrap());
        }
        bits.write_gamma(6);
        for _ in 0..64 {
            bits.push(false);
        }
        let corrupt = CompressedEncoding {
            header: enc.header,
            bits,
            sections: None,
        };
        match decode_execution(&g, &corrupt) {
            Err(CodecError::Decode { section, .. }) => assert_eq!(section, "table3"),
            other => panic!("expected table3 decode error, got {other:?}"),
        }
    }

    #[test]
    fn cost_sections_sum_to_stream_length() {
        let (_, _, _, _, enc, report) = hand_encoding();
        assert_eq!(report.actual_sum(), enc.bits.len() as u64);
        assert_eq!(report.total_actual_bits, enc.bits.len() as u64);
    }

    #[test]
    fn cost_slack_audit_on_hand_vector() {
        let (_, _, _, _, _, report) = hand_encoding();
        for section in SECTIONS {
            let cost = report.sections.get(section);
            assert!(
                cost.within_slack(),
                "{}: actual {} > fractional {} + slack {}",
                section.name(),
                cost.actual_bits,
                cost.fractional,
                cost.slack_bits
            );
        }
        // Table 1 example: 2·log2(3) + log2(C(4,3)) ≈ 5.1699.
        assert!((report.cost_s() - 5.169925).abs() < 1e-5);
    }

    #[test]
    fn savings_two_routes_agree() {
        let (g, params, _, _, _, report) = hand_encoding();
        let (n, s, d, t, eps) = (
            report.n as f64,
            report.s as f64,
            report.d as f64,
            report.t_max as f64,
            report.eps,
        );
        let log_delta = (g.delta() as f64).log2();
        let ratio = (n / s).log2();
        let xlx = if eps > 0.0 { eps * (1.0 / eps).log2() } else { 0.0 };
        // Independent route: raw S-side bits minus the bound on the
        // compressed S-side bits, term by term.
        let bound = 3.0 * s * ratio + d * s * log_delta
            - (1.0 - 13.0 * xlx) / 2.0 * d * s * ratio
            + 2.0 * eps * d * s
            + (d * t - d) * s * log_delta
            + 0.25 * d * s;
        let route_b = d * s * t * log_delta - bound;
        let denom = report.savings.abs().max(1.0);
        assert!(
            ((report.savings - route_b) / denom).abs() < 1e-9,
            "formula {} vs summed {}",
            report.savings,
            route_b
        );
        let _ = params;
    }

    #[test]
    fn random_roundtrips_across_families() {
        use crate::graph::{gen_complete, gen_complete_bipartite, gen_random_regular};
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut done = 0;
        let mut attempts = 0;
        while done < 40 && attempts < 400 {
            attempts += 1;
            let pick = rng.gen_range(0..3);
            let g = match pick {
                0 => gen_complete(rng.gen_range(6..=20)).unwrap(),
                1 => gen_complete_bipartite(rng.gen_range(3..=10)).unwrap(),
                _ => {
                    let n = rng.gen_range(8..=20) & !1usize;
                    gen_random_regular(n, 5, rng.gen()).unwrap()
                }
            };
            let d = rng.gen_range(1..=3u32);
            let cd = rng.gen_range(d..=3 * d);
            let params = RaesParams::new(d, cd, 48).unwrap();
            let tape = fresh_tape(&g, &params, rng.gen());
            let trace = match run_raes(&g, &params, &tape).unwrap() {
                RaesOutcome::Terminated { trace, .. } => trace,
                RaesOutcome::NotTerminated { .. } => continue,
            };
            let s_size = rng.gen_range(1..g.n());
            let mut all: Vec<u32> = (0..g.n() as u32).collect();
            for i in 0..s_size {
                let j = rng.gen_range(i..g.n());
                all.swap(i, j);
            }
            let mut s_set: Vec<u32> = all[..s_size].to_vec();
            s_set.sort_unstable();

            let (enc, report) =
                encode_execution(&g, &params, &tape, &trace, &s_set).unwrap();
            let (tape2, trace2) = decode_execution(&g, &enc).unwrap();
            assert_eq!(tape2, tape, "tape roundtrip failed");
            assert_eq!(trace2, trace, "trace roundtrip failed");
            assert_eq!(report.actual_sum(), enc.bits.len() as u64);
            for section in SECTIONS {
                assert!(report.sections.get(section).within_slack());
            }
            let nc = crate::analysis::classify_nodes(&trace, &s_set).unwrap();
            assert!(class_bounds_hold(&nc, g.n(), d, cd));
            done += 1;
        }
        assert!(done >= 30, "only {done} terminated cases in {attempts} attempts");
    }

    #[test]
    fn cost_report_includes_lambda_hypothesis() {
        let (g, params, tape, trace, _, _) = hand_encoding();
        let report = cost_report(&g, &params, &tape, &trace, &[1, 2, 3], 0.0).unwrap();
        assert_eq!(report.hypotheses.lambda2_plus, Some(0.0));
        // λ⁺ = 0 ≤ ε α² Δ holds whenever ε > 0.
        assert_eq!(report.hypotheses.lambda_ok, Some(true));
        assert!(!report.hypotheses.d_ok);
        assert!(!report.hypotheses.c_ok);
    }
}
