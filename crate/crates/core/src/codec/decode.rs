//! Decoder: replays the protocol round by round, pulling destinations from
//! the stream. Semi-saturated sets are recomputed from the replayed
//! history; critical sets are read from Table 3 and cross-checked against
//! an independent recomputation every round.

use super::bits::{BitCursor, Bits, BitsError};
use super::rank::{binomial, rank_width, subset_unrank, value_width};
use super::{decode_err, CodecError, CompressedEncoding};
use crate::graph::Graph;
use crate::protocol::{
    ExecutionTrace, RaesParams, RandomTape, RequestRecord, RoundRecord,
};

struct SRowState {
    v: u32,
    ell: u32,
    accepted_positions: Vec<u32>,
    out_positions: Vec<u32>,
    in_s_neighbors: Vec<u32>,
    field3_pos: usize,
    cats_start: usize,
    field5_start: usize,
    accepted_so_far: u32,
    rejected_so_far: u32,
}

fn eos(section: &'static str) -> impl Fn(BitsError) -> CodecError {
    move |e| decode_err(section, e.to_string())
}

/// Reconstructs the tape and the execution from an encoding. The output
/// tape is bit-identical to the encoder's input.
pub fn decode_execution(
    g: &Graph,
    enc: &CompressedEncoding,
) -> Result<(RandomTape, ExecutionTrace), CodecError> {
    let n = g.n();
    let h = &enc.header;
    if h.n as usize != n {
        return Err(decode_err("header", format!("n={} but graph has {n}", h.n)));
    }
    let w = value_width(g.delta() as u64);
    if h.w as usize != w {
        return Err(decode_err(
            "header",
            format!("draw width {} but graph needs {w}", h.w),
        ));
    }
    let params = RaesParams::new(h.d, h.cd, h.t_max)?;
    let d = params.d;
    let cd = params.cd;
    let t_max = params.max_rounds;
    let dt = d as usize * t_max as usize;
    let bits: &Bits = &enc.bits;
    let mut cursor = BitCursor::new(bits);

    // Table 1: the set S.
    let s_len = cursor.read_gamma().map_err(eos("table1"))? as usize;
    if s_len < 1 || s_len >= n || s_len != h.s as usize {
        return Err(decode_err("table1", format!("bad set size {s_len}")));
    }
    let rank = cursor
        .read_biguint(rank_width(&binomial(n as u64, s_len as u64)))
        .map_err(eos("table1"))?;
    let s_sorted = subset_unrank(n, s_len, &rank)
        .ok_or_else(|| decode_err("table1", "rank out of range"))?;
    let mut in_s = vec![false; n];
    for &v in &s_sorted {
        in_s[v as usize] = true;
    }

    // Table 3: critical sets for every round.
    let mut critical_sets: Vec<Vec<u32>> = Vec::with_capacity(t_max as usize);
    for t in 1..=t_max {
        let c_plus_1 = cursor.read_gamma().map_err(eos("table3"))?;
        let c_t = (c_plus_1 - 1) as usize;
        if c_t > n {
            return Err(decode_err(
                "table3",
                format!("round {t}: critical count {c_t} exceeds n"),
            ));
        }
        let rank = cursor
            .read_biguint(rank_width(&binomial(n as u64, c_t as u64)))
            .map_err(eos("table3"))?;
        let set = subset_unrank(n, c_t, &rank)
            .ok_or_else(|| decode_err("table3", format!("round {t}: rank out of range")))?;
        critical_sets.push(set);
    }

    // Table 2, upper part: fixed-size raw block, randomly accessed.
    let upper_base = cursor.pos();
    let upper_len = (n - s_len) * dt * w;
    if upper_base + upper_len > bits.len() {
        return Err(decode_err("table2-upper", "stream truncated"));
    }
    let mut upper_row = vec![usize::MAX; n];
    {
        let mut idx = 0;
        for u in 0..n {
            if !in_s[u] {
                upper_row[u] = idx;
                idx += 1;
            }
        }
    }
    let read_upper_draw = |row: usize, pos: usize| -> Result<u32, CodecError> {
        let at = upper_base + (row * dt + pos) * w;
        let draw = BitCursor::at(bits, at)
            .read_bits(w)
            .map_err(eos("table2-upper"))? as u32;
        if draw >= g.delta() {
            return Err(decode_err(
                "table2-upper",
                format!("draw {draw} out of range"),
            ));
        }
        Ok(draw)
    };

    // Field 1: per v in S, ℓ_v and the accepted positions.
    let mut cursor = BitCursor::at(bits, upper_base + upper_len);
    let mut rows: Vec<SRowState> = Vec::with_capacity(s_len);
    for &v in &s_sorted {
        let ell = cursor.read_gamma().map_err(eos("field1"))? as u32;
        if ell < d || ell as usize > dt {
            return Err(decode_err("field1", format!("node {v}: bad ℓ = {ell}")));
        }
        let rank = cursor
            .read_biguint(rank_width(&binomial(ell as u64, d as u64)))
            .map_err(eos("field1"))?;
        let accepted_positions = subset_unrank(ell as usize, d as usize, &rank)
            .ok_or_else(|| decode_err("field1", format!("node {v}: rank out of range")))?;
        rows.push(SRowState {
            v,
            ell,
            accepted_positions,
            out_positions: Vec::new(),
            in_s_neighbors: g
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&u| in_s[u as usize])
                .collect(),
            field3_pos: 0,
            cats_start: 0,
            field5_start: 0,
            accepted_so_far: 0,
            rejected_so_far: 0,
        });
    }

    // Field 2: which accepted requests leave S.
    for row in rows.iter_mut() {
        let eps_plus_1 = cursor.read_gamma().map_err(eos("field2"))?;
        let eps_d = (eps_plus_1 - 1) as u32;
        if eps_d > d {
            return Err(decode_err(
                "field2",
                format!("node {}: ε·d = {eps_d} exceeds d", row.v),
            ));
        }
        let rank = cursor
            .read_biguint(rank_width(&binomial(d as u64, eps_d as u64)))
            .map_err(eos("field2"))?;
        row.out_positions = subset_unrank(d as usize, eps_d as usize, &rank)
            .ok_or_else(|| decode_err("field2", format!("node {}: rank out of range", row.v)))?;
        if row.in_s_neighbors.is_empty() && eps_d < d {
            return Err(decode_err(
                "field2",
                format!("node {}: in-S destinations without in-S neighbors", row.v),
            ));
        }
    }

    // Derived offsets: Field 3 and Field 4 category blocks have lengths
    // computable from Fields 1-2 alone; Field 5 hangs off the stream end.
    let field3_base = cursor.pos();
    let mut offset = field3_base;
    for row in rows.iter_mut() {
        row.field3_pos = offset;
        let ws = value_width(row.in_s_neighbors.len() as u64);
        offset += row.out_positions.len() * w
            + (d as usize - row.out_positions.len()) * ws;
    }
    for row in rows.iter_mut() {
        row.cats_start = offset;
        offset += (row.ell - d) as usize;
    }
    let ranks_base = offset;
    let field5_total: usize = rows.iter().map(|r| (dt - r.ell as usize) * w).sum();
    if bits.len() < field5_total || bits.len() - field5_total < ranks_base {
        return Err(decode_err("field5", "stream truncated"));
    }
    let field5_base = bits.len() - field5_total;
    {
        let mut offset = field5_base;
        for row in rows.iter_mut() {
            row.field5_start = offset;
            offset += (dt - row.ell as usize) * w;
        }
    }
    let mut ranks_cursor = BitCursor::at(bits, ranks_base);

    // Replay.
    let mut d_out = vec![0u32; n];
    let mut d_in = vec![0u32; n];
    let mut consumed = vec![0u32; n];
    let mut s_draws: Vec<Vec<u32>> = vec![Vec::new(); s_len];
    let mut s_index = vec![usize::MAX; n];
    for (i, row) in rows.iter().enumerate() {
        s_index[row.v as usize] = i;
    }
    let mut trace_rounds: Vec<RoundRecord> = Vec::new();
    let mut terminated_at: Option<u32> = None;

    for t in 1..=t_max {
        // Phase 1a: nodes outside S draw from their raw rows.
        let mut per_node: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut req_outside = vec![0u32; n];
        for u in 0..n {
            if in_s[u] || d_out[u] == d {
                continue;
            }
            let x = d - d_out[u];
            for k in 0..x {
                let draw = read_upper_draw(upper_row[u], (consumed[u] + k) as usize)?;
                let dest = g.neighbors(u as u32)[draw as usize];
                per_node[u].push(dest);
                req_outside[dest as usize] += 1;
            }
            consumed[u] += x;
        }

        // Semi-saturated set: accepted incoming so far plus this round's
        // requests from outside S, threshold c·d/2.
        let semi_saturated: Vec<u32> = (0..n as u32)
            .filter(|&v| 2 * (d_in[v as usize] + req_outside[v as usize]) >= cd)
            .collect();
        let critical = &critical_sets[t as usize - 1];

        // Phase 1b: S nodes pull destinations from Fields 3-4.
        for row in rows.iter_mut() {
            let v = row.v as usize;
            if d_out[v] == d {
                continue;
            }
            let x = d - d_out[v];
            let ws = value_width(row.in_s_neighbors.len() as u64);
            for k in 0..x {
                let pos = consumed[v] + k;
                if pos >= row.ell {
                    return Err(decode_err(
                        "field1",
                        format!("node {}: replay exceeds ℓ = {}", row.v, row.ell),
                    ));
                }
                let accepted = row.accepted_positions.binary_search(&pos).is_ok();
                let dest = if accepted {
                    let ai = row.accepted_so_far;
                    row.accepted_so_far += 1;
                    let mut c = BitCursor::at(bits, row.field3_pos);
                    let dest = if row.out_positions.binary_search(&ai).is_ok() {
                        let draw = c.read_bits(w).map_err(eos("field3"))? as u32;
                        if draw >= g.delta() {
                            return Err(decode_err("field3", format!("draw {draw} out of range")));
                        }
                        let dest = g.neighbors(row.v)[draw as usize];
                        if in_s[dest as usize] {
                            return Err(decode_err(
                                "field3",
                                "out-of-S destination lies inside S",
                            ));
                        }
                        dest
                    } else {
                        let idx = c.read_bits(ws).map_err(eos("field3"))? as usize;
                        if idx >= row.in_s_neighbors.len() {
                            return Err(decode_err("field3", "local index out of range"));
                        }
                        row.in_s_neighbors[idx]
                    };
                    row.field3_pos = c.pos();
                    dest
                } else {
                    let cat_pos = row.cats_start + row.rejected_so_far as usize;
                    let is_critical = bits
                        .get(cat_pos)
                        .ok_or_else(|| decode_err("field4-cats", "stream truncated"))?;
                    row.rejected_so_far += 1;
                    let set: &[u32] = if is_critical { critical } else { &semi_saturated };
                    if set.is_empty() {
                        return Err(decode_err("field4-ranks", "empty class set"));
                    }
                    let idx = ranks_cursor
                        .read_bits(value_width(set.len() as u64))
                        .map_err(eos("field4-ranks"))? as usize;
                    if idx >= set.len() {
                        return Err(decode_err("field4-ranks", "rank out of range"));
                    }
                    set[idx]
                };
                let draw = g
                    .neighbors(row.v)
                    .binary_search(&dest)
                    .map_err(|_| decode_err("field4-ranks", "destination is not a neighbor"))?;
                s_draws[s_index[v]].push(draw as u32);
                per_node[v].push(dest);
            }
            consumed[v] += x;
        }

        // Phase 2 bookkeeping.
        let mut req_total = vec![0u32; n];
        for dests in &per_node {
            for &dest in dests {
                req_total[dest as usize] += 1;
            }
        }

        // Cross-check Table 3 against an independent recomputation.
        let recomputed: Vec<u32> = (0..n as u32)
            .filter(|&v| {
                let ss = 2 * (d_in[v as usize] + req_outside[v as usize]) >= cd;
                !ss && d_in[v as usize] + req_total[v as usize] > cd
            })
            .collect();
        if recomputed != *critical {
            return Err(decode_err("table3", format!("round {t}: critical set mismatch")));
        }

        let accept: Vec<bool> = (0..n)
            .map(|v| req_total[v] > 0 && req_total[v] <= cd - d_in[v])
            .collect();

        // Validate the accepted-position claims from Field 1.
        for row in &rows {
            let v = row.v as usize;
            let issued_before = consumed[v] - per_node[v].len() as u32;
            for (k, &dest) in per_node[v].iter().enumerate() {
                let pos = issued_before + k as u32;
                let claimed = row.accepted_positions.binary_search(&pos).is_ok();
                if claimed != accept[dest as usize] {
                    return Err(decode_err(
                        "field1",
                        format!("node {}: accept flag mismatch at round {t}", row.v),
                    ));
                }
            }
        }

        let mut records = Vec::new();
        for (u, dests) in per_node.iter().enumerate() {
            for &dest in dests {
                let ok = accept[dest as usize];
                if ok {
                    d_out[u] += 1;
                    d_in[dest as usize] += 1;
                }
                records.push(RequestRecord {
                    from: u as u32,
                    to: dest,
                    accepted: ok,
                });
            }
        }
        trace_rounds.push(RoundRecord {
            requests: records,
            d_out: d_out.clone(),
            d_in: d_in.clone(),
        });

        if d_out.iter().all(|&x| x == d) {
            terminated_at = Some(t);
            break;
        }
    }

    let terminated = terminated_at
        .ok_or_else(|| decode_err("stream", "replay does not terminate within T"))?;
    for t in terminated + 1..=t_max {
        if !critical_sets[t as usize - 1].is_empty() {
            return Err(decode_err(
                "table3",
                format!("nonempty critical set at round {t} after termination"),
            ));
        }
    }
    if ranks_cursor.pos() != field5_base {
        return Err(decode_err("field4-ranks", "section length mismatch"));
    }
    for row in &rows {
        if consumed[row.v as usize] != row.ell {
            return Err(decode_err(
                "field1",
                format!("node {}: ℓ = {} but replay consumed {}", row.v, row.ell, consumed[row.v as usize]),
            ));
        }
    }

    // Reassemble the tape: raw rows for V−S, replayed draws plus the
    // Field-5 tail for S.
    let mut draws = Vec::with_capacity(n * dt);
    for u in 0..n {
        if !in_s[u] {
            for pos in 0..dt {
                draws.push(read_upper_draw(upper_row[u], pos)?);
            }
        } else {
            let i = s_index[u];
            draws.extend_from_slice(&s_draws[i]);
            let mut c = BitCursor::at(bits, rows[i].field5_start);
            for _ in 0..dt - rows[i].ell as usize {
                let draw = c.read_bits(w).map_err(eos("field5"))? as u32;
                if draw >= g.delta() {
                    return Err(decode_err("field5", format!("draw {draw} out of range")));
                }
                draws.push(draw);
            }
        }
    }
    let tape = RandomTape::new(n, d, t_max, g.delta(), draws)?;
    let trace = ExecutionTrace {
        params,
        n,
        rounds: trace_rounds,
        terminated_at,
    };
    Ok((tape, trace))
}
