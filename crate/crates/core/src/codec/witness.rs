//! Witness codec for slow termination: an execution in which some node v
//! is still missing links at round t is encoded by keeping every other
//! row raw and compressing v's row, exploiting that each of v's rejected
//! requests landed on an overloaded node — a set the decoder can
//! reconstruct by replay.
//!
//! Per round, the overloaded set is taken as every node whose accepted
//! incoming links plus the requests known to the decoder (everything
//! except v's rejected requests of that round) reach c·d + 1 − d. The
//! offset by d covers v submitting several rejected requests to one
//! destination in the same round; for d = 1 the threshold is exactly c·d.

use super::bits::{BitCursor, Bits, BitsError};
use super::rank::{binomial, rank_width, subset_rank, subset_unrank, value_width};
use super::{decode_err, CodecError};
use crate::graph::Graph;
use crate::protocol::{run_raes, RaesOutcome, RaesParams, RandomTape};

/// Decoded witness: the draws of every node through round `round`; other
/// nodes carry their full t·d draws, `v` carries the ℓ_v it consumed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessTape {
    pub v: u32,
    pub round: u32,
    pub d_prime: u32,
    pub rows: Vec<Vec<u32>>,
}

fn eos(e: BitsError) -> CodecError {
    decode_err("witness", e.to_string())
}

fn overload_threshold(params: &RaesParams) -> i64 {
    params.cd as i64 + 1 - params.d as i64
}

/// Encodes the randomness of all nodes through round `t`, given that `v`
/// still has fewer than d accepted requests at that point.
pub fn encode_termination_witness(
    g: &Graph,
    params: &RaesParams,
    tape: &RandomTape,
    v: u32,
    t: u32,
) -> Result<Bits, CodecError> {
    tape.matches(g, params)?;
    if v as usize >= g.n() {
        return Err(CodecError::Precondition(format!("node {v} out of range")));
    }
    if t < 1 || t > params.max_rounds {
        return Err(CodecError::Precondition(format!(
            "round {t} outside 1..={}",
            params.max_rounds
        )));
    }
    let run_params = RaesParams::new(params.d, params.cd, t)?;
    let run_tape = tape.truncated(t);
    let trace = match run_raes(g, &run_params, &run_tape)? {
        RaesOutcome::Terminated { .. } => {
            return Err(CodecError::Precondition(format!(
                "execution terminates by round {t}; node {v} is not deficient"
            )))
        }
        RaesOutcome::NotTerminated { trace } => trace,
    };
    let d = params.d;
    let d_prime = trace.rounds.last().unwrap().d_out[v as usize];
    if d_prime >= d {
        return Err(CodecError::Precondition(format!(
            "node {v} already has {d_prime} >= d accepted requests at round {t}"
        )));
    }

    let n = g.n();
    let w = value_width(g.delta() as u64);
    let threshold = overload_threshold(params);

    // v's requests in tape order: (round, dest, accepted).
    let mut v_requests: Vec<(u32, u32, bool)> = Vec::new();
    for (idx, round) in trace.rounds.iter().enumerate() {
        for q in &round.requests {
            if q.from == v {
                v_requests.push((idx as u32 + 1, q.to, q.accepted));
            }
        }
    }
    let ell = v_requests.len() as u32;
    let accepted_positions: Vec<u32> = v_requests
        .iter()
        .enumerate()
        .filter(|(_, &(_, _, acc))| acc)
        .map(|(i, _)| i as u32)
        .collect();
    debug_assert_eq!(accepted_positions.len() as u32, d_prime);

    let mut bits = Bits::new();
    bits.write_bits(v as u64, value_width(n as u64));
    bits.write_gamma(t as u64);
    for u in 0..n as u32 {
        if u != v {
            for &draw in run_tape.row(u) {
                bits.write_bits(draw as u64, w);
            }
        }
    }
    bits.write_gamma(ell as u64);
    bits.write_gamma(d_prime as u64 + 1);
    let width = rank_width(&binomial(ell as u64, d_prime as u64));
    bits.write_biguint(
        &subset_rank(ell as usize, &accepted_positions),
        width,
    );
    let v_row = run_tape.row(v);
    for (pos, &(_, _, acc)) in v_requests.iter().enumerate() {
        if acc {
            bits.write_bits(v_row[pos] as u64, w);
        }
    }

    // Rejected destinations, ranked inside the per-round overloaded sets.
    let mut d_in_start = vec![0u32; n];
    for (idx, round) in trace.rounds.iter().enumerate() {
        let tau = idx as u32 + 1;
        let mut known = vec![0i64; n];
        for q in &round.requests {
            if q.from != v || q.accepted {
                known[q.to as usize] += 1;
            }
        }
        let overloaded: Vec<u32> = (0..n as u32)
            .filter(|&u| d_in_start[u as usize] as i64 + known[u as usize] >= threshold)
            .collect();
        for (pos, &(tq, dest, acc)) in v_requests.iter().enumerate() {
            if tq != tau || acc {
                continue;
            }
            let idx = overloaded.binary_search(&dest).map_err(|_| {
                CodecError::Internal(format!(
                    "rejected destination {dest} not overloaded at round {tau} (position {pos})"
                ))
            })?;
            bits.write_bits(idx as u64, value_width(overloaded.len() as u64));
        }
        for q in &round.requests {
            if q.accepted {
                d_in_start[q.to as usize] += 1;
            }
        }
    }
    Ok(bits)
}

/// Inverts [`encode_termination_witness`], replaying the execution to
/// rebuild the overloaded sets.
pub fn decode_termination_witness(
    g: &Graph,
    params: &RaesParams,
    stream: &Bits,
) -> Result<WitnessTape, CodecError> {
    let n = g.n();
    let d = params.d;
    let cd = params.cd;
    let w = value_width(g.delta() as u64);
    let threshold = overload_threshold(params);
    let mut cursor = BitCursor::new(stream);

    let v = cursor.read_bits(value_width(n as u64)).map_err(eos)? as u32;
    if v as usize >= n {
        return Err(decode_err("witness", format!("node {v} out of range")));
    }
    let t = cursor.read_gamma().map_err(eos)? as u32;
    if t < 1 || t > params.max_rounds {
        return Err(decode_err("witness", format!("round {t} out of range")));
    }
    let td = t as usize * d as usize;

    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
    for u in 0..n as u32 {
        if u == v {
            continue;
        }
        let row = &mut rows[u as usize];
        row.reserve(td);
        for _ in 0..td {
            let draw = cursor.read_bits(w).map_err(eos)? as u32;
            if draw >= g.delta() {
                return Err(decode_err("witness", format!("draw {draw} out of range")));
            }
            row.push(draw);
        }
    }
    let ell = cursor.read_gamma().map_err(eos)? as u32;
    if ell < 1 || ell as usize > td {
        return Err(decode_err("witness", format!("bad ℓ = {ell}")));
    }
    let d_prime_plus_1 = cursor.read_gamma().map_err(eos)?;
    let d_prime = (d_prime_plus_1 - 1) as u32;
    if d_prime >= d {
        return Err(decode_err("witness", format!("d' = {d_prime} not below d")));
    }
    let rank = cursor
        .read_biguint(rank_width(&binomial(ell as u64, d_prime as u64)))
        .map_err(eos)?;
    let accepted_positions = subset_unrank(ell as usize, d_prime as usize, &rank)
        .ok_or_else(|| decode_err("witness", "accepted-set rank out of range"))?;

    // Replay. Raw accepted draws and rejected ranks are two contiguous
    // blocks, each consumed in tape order.
    let mut accepted_cursor = cursor;
    let mut rejected_pos = accepted_cursor.pos() + d_prime as usize * w;
    let mut d_out = vec![0u32; n];
    let mut d_in = vec![0u32; n];
    let mut consumed = vec![0u32; n];
    let mut v_draws: Vec<u32> = Vec::with_capacity(ell as usize);

    for _tau in 1..=t {
        let mut per_node: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut known = vec![0i64; n];
        for u in 0..n {
            if u as u32 == v || d_out[u] == d {
                continue;
            }
            let x = d - d_out[u];
            for k in 0..x {
                let pos = (consumed[u] + k) as usize;
                if pos >= td {
                    return Err(decode_err("witness", "foreign row exhausted"));
                }
                let dest = g.neighbors(u as u32)[rows[u][pos] as usize];
                per_node[u].push(dest);
                known[dest as usize] += 1;
            }
            consumed[u] += x;
        }

        // v's accepted requests this round are known raw; read them first.
        let x_v = d - d_out[v as usize];
        let mut v_round: Vec<(u32, Option<u32>)> = Vec::with_capacity(x_v as usize);
        for k in 0..x_v {
            let pos = consumed[v as usize] + k;
            if pos >= ell {
                return Err(decode_err("witness", "replay exceeds ℓ"));
            }
            if accepted_positions.binary_search(&pos).is_ok() {
                let draw = accepted_cursor.read_bits(w).map_err(eos)? as u32;
                if draw >= g.delta() {
                    return Err(decode_err("witness", format!("draw {draw} out of range")));
                }
                let dest = g.neighbors(v)[draw as usize];
                known[dest as usize] += 1;
                v_round.push((pos, Some(dest)));
            } else {
                v_round.push((pos, None));
            }
        }

        let overloaded: Vec<u32> = (0..n as u32)
            .filter(|&u| d_in[u as usize] as i64 + known[u as usize] >= threshold)
            .collect();
        let mut rej_cursor = BitCursor::at(stream, rejected_pos);
        for entry in v_round.iter_mut() {
            if entry.1.is_none() {
                if overloaded.is_empty() {
                    return Err(decode_err("witness", "empty overloaded set"));
                }
                let idx = rej_cursor
                    .read_bits(value_width(overloaded.len() as u64))
                    .map_err(eos)? as usize;
                if idx >= overloaded.len() {
                    return Err(decode_err("witness", "overload rank out of range"));
                }
                entry.1 = Some(overloaded[idx]);
            }
        }
        rejected_pos = rej_cursor.pos();
        for &(_, dest) in &v_round {
            let dest = dest.unwrap();
            let draw = g
                .neighbors(v)
                .binary_search(&dest)
                .map_err(|_| decode_err("witness", "destination is not a neighbor"))?;
            v_draws.push(draw as u32);
            per_node[v as usize].push(dest);
        }
        consumed[v as usize] += x_v;

        // Phase 2.
        let mut req_total = vec![0u32; n];
        for dests in &per_node {
            for &dest in dests {
                req_total[dest as usize] += 1;
            }
        }
        let accept: Vec<bool> = (0..n)
            .map(|u| req_total[u] > 0 && req_total[u] <= cd - d_in[u])
            .collect();
        for &(pos, dest) in &v_round {
            let claimed = accepted_positions.binary_search(&pos).is_ok();
            if claimed != accept[dest.unwrap() as usize] {
                return Err(decode_err("witness", "accept flag mismatch"));
            }
        }
        for (u, dests) in per_node.iter().enumerate() {
            for &dest in dests {
                if accept[dest as usize] {
                    d_out[u] += 1;
                    d_in[dest as usize] += 1;
                }
            }
        }
    }

    if d_out[v as usize] != d_prime {
        return Err(decode_err(
            "witness",
            format!("replay gives d' = {} but stream claims {d_prime}", d_out[v as usize]),
        ));
    }
    if consumed[v as usize] != ell {
        return Err(decode_err("witness", "ℓ mismatch after replay"));
    }
    if rejected_pos != stream.len() {
        return Err(decode_err("witness", "trailing bits"));
    }
    rows[v as usize] = v_draws;
    Ok(WitnessTape {
        v,
        round: t,
        d_prime,
        rows,
    })
}
