//! Encoder for the compressed execution representation.

use super::bits::Bits;
use super::cost::{build_cost_report, SectionSlack};
use super::rank::{binomial, rank_width, subset_rank, value_width};
use super::{
    build_s_rows, CodecError, CompressedEncoding, CostReport, EncodingHeader, SectionTable,
};
use crate::analysis::{classify_nodes, NodeClassification, RejectionClass};
use crate::graph::{set_mask, Graph};
use crate::protocol::{ExecutionTrace, RaesParams, RandomTape};

/// Encodes a terminated execution against a nonempty proper subset S.
/// Returns the bitstream with its section table and the full cost ledger
/// (fractional formula values, actual bits, audited slack).
pub fn encode_execution(
    g: &Graph,
    params: &RaesParams,
    tape: &RandomTape,
    trace: &ExecutionTrace,
    s_set: &[u32],
) -> Result<(CompressedEncoding, CostReport), CodecError> {
    tape.matches(g, params)?;
    if trace.params != *params || trace.n != g.n() {
        return Err(CodecError::Precondition(
            "trace was produced under different parameters".into(),
        ));
    }
    let rounds_used = trace.terminated_at.ok_or(CodecError::NotTerminated)?;

    let n = g.n();
    let mut s_sorted = s_set.to_vec();
    s_sorted.sort_unstable();
    let in_s =
        set_mask(n, &s_sorted).map_err(|e| CodecError::InvalidSet(e.to_string()))?;
    if s_sorted.is_empty() || s_sorted.len() >= n {
        return Err(CodecError::InvalidSet(
            "S must be nonempty and proper".into(),
        ));
    }

    let classification = classify_nodes(trace, &s_sorted)?;
    let rows = build_s_rows(g, trace, &s_sorted, &in_s)?;

    let d = params.d;
    let cd = params.cd;
    let t_max = params.max_rounds;
    let dt = d as usize * t_max as usize;
    let w = value_width(g.delta() as u64);

    let mut bits = Bits::new();
    let mut starts = [0usize; 9];
    let mut slack = SectionSlack::default();

    // Table 1: |S| prefix-free, then the rank of S among size-s subsets.
    starts[0] = bits.len();
    bits.write_gamma(s_sorted.len() as u64);
    slack.table1.gammas += 1;
    let width = rank_width(&binomial(n as u64, s_sorted.len() as u64));
    bits.write_biguint(&subset_rank(n, &s_sorted), width);
    slack.table1.fixed += 1;

    // Table 3: per round, |C_t| prefix-free (shifted by one) and the rank
    // of C_t.
    starts[1] = bits.len();
    let empty: Vec<u32> = Vec::new();
    for t in 1..=t_max {
        let c_set = if t <= rounds_used {
            &classification.rounds[t as usize - 1].critical
        } else {
            &empty
        };
        bits.write_gamma(c_set.len() as u64 + 1);
        slack.table3.gammas += 1;
        slack.table3.shifts += 1;
        let width = rank_width(&binomial(n as u64, c_set.len() as u64));
        bits.write_biguint(&subset_rank(n, c_set), width);
        slack.table3.fixed += 1;
    }

    // Table 2, upper part: the full rows of V−S, raw.
    starts[2] = bits.len();
    for u in 0..n as u32 {
        if !in_s[u as usize] {
            for &draw in tape.row(u) {
                bits.write_bits(draw as u64, w);
            }
            slack.table2_upper.fixed += dt as u64;
        }
    }

    // Field 1: ℓ_v and the accepted positions.
    starts[3] = bits.len();
    for row in &rows {
        bits.write_gamma(row.ell() as u64);
        slack.field1.gammas += 1;
        let width = rank_width(&binomial(row.ell() as u64, d as u64));
        bits.write_biguint(&subset_rank(row.ell() as usize, &row.accepted_positions), width);
        slack.field1.fixed += 1;
    }

    // Field 2: which accepted requests leave S (count shifted by one so
    // zero is encodable).
    starts[4] = bits.len();
    for row in &rows {
        bits.write_gamma(row.eps_d() as u64 + 1);
        slack.field2.gammas += 1;
        slack.field2.shifts += 1;
        let width = rank_width(&binomial(d as u64, row.eps_d() as u64));
        bits.write_biguint(&subset_rank(d as usize, &row.out_positions), width);
        slack.field2.fixed += 1;
    }

    // Field 3: accepted destinations in tape order; raw draw when leaving
    // S, local in-S neighbor rank otherwise.
    starts[5] = bits.len();
    for row in &rows {
        let ws = value_width(row.deg_s() as u64);
        for (ai, &pos) in row.accepted_positions.iter().enumerate() {
            let (_, dest, _) = row.requests[pos as usize];
            let draw = tape.row(row.v)[pos as usize];
            if g.neighbors(row.v)[draw as usize] != dest {
                return Err(CodecError::Internal(format!(
                    "tape/trace mismatch at node {} position {pos}",
                    row.v
                )));
            }
            if row.out_positions.binary_search(&(ai as u32)).is_ok() {
                bits.write_bits(draw as u64, w);
            } else {
                let idx = row
                    .in_s_neighbors
                    .binary_search(&dest)
                    .map_err(|_| CodecError::Internal("in-S destination not found".into()))?;
                bits.write_bits(idx as u64, ws);
            }
            slack.field3.fixed += 1;
        }
    }

    // Field 4, category bits: one bit per rejected request in tape order
    // (1 = critical). This part costs exactly ℓ_v − d bits per node.
    starts[6] = bits.len();
    let rejected_lists = rejected_lists(&rows, &classification)?;
    for list in &rejected_lists {
        for &(_, _, class) in list {
            bits.push(class == RejectionClass::Critical);
        }
    }

    // Field 4, destination ranks: global replay order (round, node,
    // position); widths are the actual per-round set sizes.
    starts[7] = bits.len();
    let mut rank_cursors = vec![0usize; rows.len()];
    for t in 1..=rounds_used {
        let round_classes = &classification.rounds[t as usize - 1];
        for (i, list) in rejected_lists.iter().enumerate() {
            while rank_cursors[i] < list.len() && list[rank_cursors[i]].0 == t {
                let (_, dest, class) = list[rank_cursors[i]];
                let set = match class {
                    RejectionClass::Critical => &round_classes.critical,
                    RejectionClass::SemiSaturated => &round_classes.semi_saturated,
                };
                let idx = set
                    .binary_search(&dest)
                    .map_err(|_| CodecError::Internal("rejected destination not in class".into()))?;
                bits.write_bits(idx as u64, value_width(set.len() as u64));
                slack.field4_ranks.fixed += 1;
                rank_cursors[i] += 1;
            }
        }
    }
    if rank_cursors
        .iter()
        .zip(&rejected_lists)
        .any(|(&c, l)| c != l.len())
    {
        return Err(CodecError::Internal(
            "rejected requests outside recorded rounds".into(),
        ));
    }

    // Field 5: the unused tail of each S-row, raw.
    starts[8] = bits.len();
    for row in &rows {
        let row_draws = tape.row(row.v);
        for &draw in &row_draws[row.ell() as usize..] {
            bits.write_bits(draw as u64, w);
        }
        slack.field5.fixed += (dt - row.ell() as usize) as u64;
    }

    let sections = SectionTable {
        starts,
        end: bits.len(),
    };
    let header = EncodingHeader {
        n: n as u32,
        w: w as u32,
        d,
        cd,
        t_max,
        s: s_sorted.len() as u32,
    };
    let report = build_cost_report(g, params, &rows, &classification, &sections, &slack);
    let enc = CompressedEncoding {
        header,
        bits,
        sections: Some(sections),
    };
    Ok((enc, report))
}

/// Per-row rejected requests in tape order as (round, dest, class).
fn rejected_lists(
    rows: &[super::SRow],
    classification: &NodeClassification,
) -> Result<Vec<Vec<(u32, u32, RejectionClass)>>, CodecError> {
    rows.iter()
        .map(|row| {
            let classes = classification
                .rejected
                .get(&row.v)
                .map(|v| v.as_slice())
                .unwrap_or(&[]);
            let rejected: Vec<(u32, u32)> = row
                .requests
                .iter()
                .filter(|&&(_, _, acc)| !acc)
                .map(|&(t, dest, _)| (t, dest))
                .collect();
            if rejected.len() != classes.len() {
                return Err(CodecError::Internal(
                    "classification does not cover all rejections".into(),
                ));
            }
            Ok(rejected
                .into_iter()
                .zip(classes)
                .map(|((t, dest), &(ct, class))| {
                    debug_assert_eq!(t, ct);
                    (t, dest, class)
                })
                .collect())
        })
        .collect()
}

/// Evaluates the full cost ledger for a terminated execution, including the
/// spectral hypothesis check against the supplied λ⁺.
pub fn cost_report(
    g: &Graph,
    params: &RaesParams,
    tape: &RandomTape,
    trace: &ExecutionTrace,
    s_set: &[u32],
    lambda2_plus: f64,
) -> Result<CostReport, CodecError> {
    let (_, mut report) = encode_execution(g, params, tape, trace, s_set)?;
    let alpha = g.alpha();
    report.hypotheses.lambda2_plus = Some(lambda2_plus);
    report.hypotheses.lambda_ok =
        Some(lambda2_plus <= report.eps * alpha * alpha * g.delta() as f64);
    Ok(report)
}
