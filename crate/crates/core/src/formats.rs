//! File formats for every artifact.
//!
//! - Graph JSON: `{"n", "delta", "edges": [[u,v], ...]}` with u < v and the
//!   list sorted lexicographically; readers re-validate all graph
//!   invariants.
//! - Trace JSON: `{"params": {n, d, cd, max_rounds}, "rounds": [[{from, to,
//!   accepted}, ...], ...], "terminated_at": int|null}`; degree snapshots
//!   are recomputed on load.
//! - Tape: a JSON form (`{"n", "d", "max_rounds", "delta", "draws":
//!   [[...], ...]}`, row-major by node) and a packed binary form: magic
//!   `RAEST1`, four big-endian u32 (n, d, T, Δ), then the draws as
//!   ⌈log₂Δ⌉-bit fields in big-endian bit order, zero-padded to a byte.
//! - Encoding: magic `RAESC1`, six big-endian u32 (n, w, d, cd, T, s),
//!   then the bitstream padded to a byte boundary; the final 3 bits of the
//!   payload store the pad length, so the stream length is
//!   `8·payload − 3 − pad`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::StatsTable;
use crate::codec::{Bits, CompressedEncoding, EncodingHeader};
use crate::graph::{Graph, GraphError};
use crate::protocol::{
    ExecutionTrace, ProtocolError, RaesParams, RandomTape, RequestRecord, RoundRecord, SubgraphH,
};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("invalid file: {0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

fn invalid(msg: impl Into<String>) -> FormatError {
    FormatError::Invalid(msg.into())
}

// ---------------------------------------------------------------- graphs

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    delta: u32,
    edges: Vec<(u32, u32)>,
}

pub fn graph_to_json(g: &Graph) -> String {
    let doc = GraphJson {
        n: g.n(),
        delta: g.delta(),
        edges: g.edges(),
    };
    serde_json::to_string_pretty(&doc).expect("graph serializes")
}

pub fn graph_from_json(text: &str) -> Result<Graph, FormatError> {
    let doc: GraphJson = serde_json::from_str(text)?;
    for pair in doc.edges.windows(2) {
        if pair[0] >= pair[1] {
            return Err(invalid("edge list must be sorted lexicographically"));
        }
    }
    for &(u, v) in &doc.edges {
        if u >= v {
            return Err(invalid(format!("edge ({u},{v}) must have u < v")));
        }
    }
    let g = Graph::from_edges(doc.n, &doc.edges)?;
    if g.delta() != doc.delta {
        return Err(invalid(format!(
            "declared delta {} but edges give {}",
            doc.delta,
            g.delta()
        )));
    }
    Ok(g)
}

pub fn save_graph(path: &Path, g: &Graph) -> Result<(), FormatError> {
    Ok(std::fs::write(path, graph_to_json(g))?)
}

pub fn load_graph(path: &Path) -> Result<Graph, FormatError> {
    graph_from_json(&std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------- traces

#[derive(Serialize, Deserialize)]
struct TraceParamsJson {
    n: usize,
    d: u32,
    cd: u32,
    max_rounds: u32,
}

#[derive(Serialize, Deserialize)]
struct TraceJson {
    params: TraceParamsJson,
    rounds: Vec<Vec<RequestRecord>>,
    terminated_at: Option<u32>,
}

pub fn trace_to_json(trace: &ExecutionTrace) -> String {
    let doc = TraceJson {
        params: TraceParamsJson {
            n: trace.n,
            d: trace.params.d,
            cd: trace.params.cd,
            max_rounds: trace.params.max_rounds,
        },
        rounds: trace.rounds.iter().map(|r| r.requests.clone()).collect(),
        terminated_at: trace.terminated_at,
    };
    serde_json::to_string_pretty(&doc).expect("trace serializes")
}

pub fn trace_from_json(text: &str) -> Result<ExecutionTrace, FormatError> {
    let doc: TraceJson = serde_json::from_str(text)?;
    let params = RaesParams::new(doc.params.d, doc.params.cd, doc.params.max_rounds)?;
    let n = doc.params.n;
    let mut d_out = vec![0u32; n];
    let mut d_in = vec![0u32; n];
    let mut rounds = Vec::with_capacity(doc.rounds.len());
    for requests in doc.rounds {
        for q in &requests {
            if q.from as usize >= n || q.to as usize >= n {
                return Err(invalid(format!(
                    "request {}->{} out of range for n={n}",
                    q.from, q.to
                )));
            }
            if q.accepted {
                d_out[q.from as usize] += 1;
                d_in[q.to as usize] += 1;
            }
        }
        rounds.push(RoundRecord {
            requests,
            d_out: d_out.clone(),
            d_in: d_in.clone(),
        });
    }
    Ok(ExecutionTrace {
        params,
        n,
        rounds,
        terminated_at: doc.terminated_at,
    })
}

pub fn save_trace(path: &Path, trace: &ExecutionTrace) -> Result<(), FormatError> {
    Ok(std::fs::write(path, trace_to_json(trace))?)
}

pub fn load_trace(path: &Path) -> Result<ExecutionTrace, FormatError> {
    trace_from_json(&std::fs::read_to_string(path)?)
}

// ----------------------------------------------------------------- tapes

#[derive(Serialize, Deserialize)]
struct TapeJson {
    n: usize,
    d: u32,
    max_rounds: u32,
    delta: u32,
    draws: Vec<Vec<u32>>,
}

pub fn tape_to_json(tape: &RandomTape) -> String {
    let doc = TapeJson {
        n: tape.n(),
        d: tape.d(),
        max_rounds: tape.max_rounds(),
        delta: tape.delta(),
        draws: (0..tape.n() as u32).map(|v| tape.row(v).to_vec()).collect(),
    };
    serde_json::to_string(&doc).expect("tape serializes")
}

pub fn tape_from_json(text: &str) -> Result<RandomTape, FormatError> {
    let doc: TapeJson = serde_json::from_str(text)?;
    let expected = doc.d as usize * doc.max_rounds as usize;
    if doc.draws.len() != doc.n {
        return Err(invalid("tape must have one draw row per node"));
    }
    let mut flat = Vec::with_capacity(doc.n * expected);
    for row in &doc.draws {
        if row.len() != expected {
            return Err(invalid(format!(
                "tape rows must hold d·T = {expected} draws"
            )));
        }
        flat.extend_from_slice(row);
    }
    Ok(RandomTape::new(
        doc.n,
        doc.d,
        doc.max_rounds,
        doc.delta,
        flat,
    )?)
}

const TAPE_MAGIC: &[u8; 6] = b"RAEST1";

pub fn tape_to_bytes(tape: &RandomTape) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(TAPE_MAGIC);
    for value in [tape.n() as u32, tape.d(), tape.max_rounds(), tape.delta()] {
        out.extend_from_slice(&value.to_be_bytes());
    }
    let w = crate::codec::value_width(tape.delta() as u64);
    let mut bits = Bits::new();
    for &draw in tape.draws() {
        bits.write_bits(draw as u64, w);
    }
    out.extend_from_slice(bits.as_bytes());
    out
}

pub fn tape_from_bytes(bytes: &[u8]) -> Result<RandomTape, FormatError> {
    if bytes.len() < 22 || &bytes[..6] != TAPE_MAGIC {
        return Err(invalid("not a tape file (missing RAEST1 magic)"));
    }
    let word = |i: usize| u32::from_be_bytes(bytes[6 + 4 * i..10 + 4 * i].try_into().unwrap());
    let (n, d, t_max, delta) = (word(0) as usize, word(1), word(2), word(3));
    if delta == 0 {
        return Err(invalid("tape delta must be positive"));
    }
    let w = crate::codec::value_width(delta as u64);
    let count = n * d as usize * t_max as usize;
    let payload = &bytes[22..];
    if payload.len() * 8 < count * w {
        return Err(invalid("tape payload truncated"));
    }
    let bits = Bits::from_bytes(payload.to_vec(), payload.len() * 8).unwrap();
    let mut cursor = crate::codec::BitCursor::new(&bits);
    let mut draws = Vec::with_capacity(count);
    for _ in 0..count {
        draws.push(cursor.read_bits(w).map_err(|e| invalid(e.to_string()))? as u32);
    }
    Ok(RandomTape::new(n, d, t_max, delta, draws)?)
}

pub fn save_tape_json(path: &Path, tape: &RandomTape) -> Result<(), FormatError> {
    Ok(std::fs::write(path, tape_to_json(tape))?)
}

pub fn save_tape_binary(path: &Path, tape: &RandomTape) -> Result<(), FormatError> {
    Ok(std::fs::write(path, tape_to_bytes(tape))?)
}

/// Loads a tape from either form, sniffing the binary magic.
pub fn load_tape(path: &Path) -> Result<RandomTape, FormatError> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(TAPE_MAGIC) {
        tape_from_bytes(&bytes)
    } else {
        tape_from_json(std::str::from_utf8(&bytes).map_err(|e| invalid(e.to_string()))?)
    }
}

// ------------------------------------------------------------- subgraphs

pub fn subgraph_to_json(h: &SubgraphH) -> String {
    serde_json::to_string_pretty(h).expect("subgraph serializes")
}

pub fn subgraph_from_json(text: &str) -> Result<SubgraphH, FormatError> {
    let h: SubgraphH = serde_json::from_str(text)?;
    for e in &h.edges {
        if e.requester as usize >= h.n || e.dest as usize >= h.n {
            return Err(invalid(format!(
                "edge {}-{} out of range for n={}",
                e.requester, e.dest, h.n
            )));
        }
    }
    Ok(h)
}

pub fn save_subgraph(path: &Path, h: &SubgraphH) -> Result<(), FormatError> {
    Ok(std::fs::write(path, subgraph_to_json(h))?)
}

pub fn load_subgraph(path: &Path) -> Result<SubgraphH, FormatError> {
    subgraph_from_json(&std::fs::read_to_string(path)?)
}

// ------------------------------------------------------------- encodings

const ENCODING_MAGIC: &[u8; 6] = b"RAESC1";

pub fn encoding_to_bytes(enc: &CompressedEncoding) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(ENCODING_MAGIC);
    let h = &enc.header;
    for value in [h.n, h.w, h.d, h.cd, h.t_max, h.s] {
        out.extend_from_slice(&value.to_be_bytes());
    }
    // Pad so that stream + pad + 3-bit suffix fills whole bytes; the
    // suffix records the pad length.
    let len = enc.bits.len();
    let pad = (8 - (len + 3) % 8) % 8;
    let mut bits = enc.bits.clone();
    for _ in 0..pad {
        bits.push(false);
    }
    bits.write_bits(pad as u64, 3);
    debug_assert_eq!(bits.len() % 8, 0);
    out.extend_from_slice(bits.as_bytes());
    out
}

pub fn encoding_from_bytes(bytes: &[u8]) -> Result<CompressedEncoding, FormatError> {
    if bytes.len() < 30 || &bytes[..6] != ENCODING_MAGIC {
        return Err(invalid("not an encoding file (missing RAESC1 magic)"));
    }
    let word = |i: usize| u32::from_be_bytes(bytes[6 + 4 * i..10 + 4 * i].try_into().unwrap());
    let header = EncodingHeader {
        n: word(0),
        w: word(1),
        d: word(2),
        cd: word(3),
        t_max: word(4),
        s: word(5),
    };
    let payload = &bytes[30..];
    let total = payload.len() * 8;
    if total < 3 {
        return Err(invalid("encoding payload truncated"));
    }
    let all = Bits::from_bytes(payload.to_vec(), total).unwrap();
    let mut tail = crate::codec::BitCursor::at(&all, total - 3);
    let pad = tail.read_bits(3).map_err(|e| invalid(e.to_string()))? as usize;
    if total < 3 + pad {
        return Err(invalid("encoding pad length exceeds payload"));
    }
    let stream_len = total - 3 - pad;
    let bits = Bits::from_bytes(payload.to_vec(), stream_len)
        .ok_or_else(|| invalid("encoding stream length inconsistent"))?;
    Ok(CompressedEncoding {
        header,
        bits,
        sections: None,
    })
}

pub fn save_encoding(path: &Path, enc: &CompressedEncoding) -> Result<(), FormatError> {
    Ok(std::fs::write(path, encoding_to_bytes(enc))?)
}

pub fn load_encoding(path: &Path) -> Result<CompressedEncoding, FormatError> {
    encoding_from_bytes(&std::fs::read(path)?)
}

// ----------------------------------------------------------------- stats

#[derive(Serialize, Deserialize)]
struct RunStatsJson {
    seed: u64,
    #[serde(flatten)]
    stats: crate::protocol::RunStats,
}

/// Writes one run's counters together with the seed that produced it.
pub fn save_run_stats(
    path: &Path,
    stats: &crate::protocol::RunStats,
    seed: u64,
) -> Result<(), FormatError> {
    let doc = RunStatsJson {
        seed,
        stats: stats.clone(),
    };
    Ok(std::fs::write(path, serde_json::to_string_pretty(&doc)?)?)
}

pub fn save_stats_csv(path: &Path, table: &StatsTable) -> Result<(), FormatError> {
    Ok(std::fs::write(path, table.to_csv())?)
}

pub fn save_stats_json(path: &Path, table: &StatsTable) -> Result<(), FormatError> {
    Ok(std::fs::write(path, serde_json::to_string_pretty(table)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_complete, gen_random_regular};
    use crate::protocol::{fixtures, fresh_tape, run_raes, RaesOutcome};
    use proptest::prelude::*;

    #[test]
    fn graph_json_roundtrip_is_byte_identical() {
        let g = gen_random_regular(12, 4, 5).unwrap();
        let text = graph_to_json(&g);
        let g2 = graph_from_json(&text).unwrap();
        assert_eq!(graph_to_json(&g2), text);
        assert_eq!(g, g2);
    }

    #[test]
    fn graph_json_golden() {
        let g = gen_complete(3).unwrap();
        let text = graph_to_json(&g);
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["n"], 3);
        assert_eq!(doc["delta"], 2);
        assert_eq!(doc["edges"][0][0], 0);
        assert_eq!(doc["edges"][0][1], 1);
    }

    #[test]
    fn graph_json_rejects_bad_input() {
        // Wrong delta.
        let bad = r#"{"n":3,"delta":1,"edges":[[0,1],[0,2],[1,2]]}"#;
        assert!(graph_from_json(bad).is_err());
        // Unsorted edge list.
        let bad = r#"{"n":3,"delta":2,"edges":[[0,2],[0,1],[1,2]]}"#;
        assert!(graph_from_json(bad).is_err());
        // Irregular graph.
        let bad = r#"{"n":3,"delta":2,"edges":[[0,1],[1,2]]}"#;
        assert!(graph_from_json(bad).is_err());
    }

    #[test]
    fn trace_roundtrip_restores_snapshots() {
        let (g, params, tape) = fixtures::hand_instance();
        let trace = match run_raes(&g, &params, &tape).unwrap() {
            RaesOutcome::Terminated { trace, .. } => trace,
            _ => unreachable!(),
        };
        let text = trace_to_json(&trace);
        let trace2 = trace_from_json(&text).unwrap();
        assert_eq!(trace2, trace);
        assert_eq!(trace_to_json(&trace2), text);
    }

    #[test]
    fn tape_json_and_binary_roundtrip() {
        let (g, params, _) = fixtures::hand_instance();
        let tape = fresh_tape(&g, &params, 11);
        let json = tape_to_json(&tape);
        assert_eq!(tape_from_json(&json).unwrap(), tape);

        let bytes = tape_to_bytes(&tape);
        assert_eq!(tape_from_bytes(&bytes).unwrap(), tape);
        assert_eq!(tape_to_bytes(&tape_from_bytes(&bytes).unwrap()), bytes);
    }

    #[test]
    fn encoding_file_roundtrip() {
        let (g, params, tape) = fixtures::hand_instance();
        let trace = match run_raes(&g, &params, &tape).unwrap() {
            RaesOutcome::Terminated { trace, .. } => trace,
            _ => unreachable!(),
        };
        let (enc, _) =
            crate::codec::encode_execution(&g, &params, &tape, &trace, &[1, 2, 3]).unwrap();
        let bytes = encoding_to_bytes(&enc);
        let enc2 = encoding_from_bytes(&bytes).unwrap();
        assert_eq!(enc2.header, enc.header);
        assert_eq!(enc2.bits, enc.bits);
        assert_eq!(encoding_to_bytes(&enc2), bytes);
        // The re-read stream still decodes to the original tape.
        let (tape2, _) = crate::codec::decode_execution(&g, &enc2).unwrap();
        assert_eq!(tape2, tape);
    }

    proptest! {
        #[test]
        fn tape_binary_roundtrip_property(n in 2usize..10, d in 1u32..4, t in 1u32..6, seed in any::<u64>()) {
            let g = gen_complete(n).unwrap();
            let params = crate::protocol::RaesParams::new(d, d, t).unwrap();
            let tape = fresh_tape(&g, &params, seed);
            let bytes = tape_to_bytes(&tape);
            prop_assert_eq!(tape_from_bytes(&bytes).unwrap(), tape);
        }
    }
}
