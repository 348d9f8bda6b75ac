use std::path::PathBuf;

use clap::Args;
use raes_core::formats::{
    load_graph, load_tape, save_run_stats, save_subgraph, save_tape_binary, save_tape_json,
    save_trace,
};
use raes_core::protocol::{fresh_tape, run_raes, RaesOutcome, RaesParams};

use crate::{parse_capacity, CliError, EXIT_NOT_TERMINATED, EXIT_OK};

#[derive(Args)]
pub struct RunArgs {
    /// Input graph JSON.
    #[arg(short = 'g', long)]
    graph: PathBuf,
    /// Out-degree target d.
    #[arg(long)]
    d: u32,
    /// Capacity factor c (integer or p/q; c·d must be an integer).
    #[arg(long)]
    c: String,
    /// Round budget T; defaults to twice the logarithmic bound.
    #[arg(long)]
    max_rounds: Option<u32>,
    /// Tape seed (ignored with --tape).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replay an existing tape file (JSON or binary) instead of sampling.
    #[arg(long)]
    tape: Option<PathBuf>,
    /// Output directory for trace.json, subgraph.json, stats.json and the
    /// tape.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Write the tape in packed binary form instead of JSON.
    #[arg(long)]
    binary_tape: bool,
}

pub fn run(args: RunArgs) -> Result<i32, CliError> {
    let g = load_graph(&args.graph)?;
    let cd = parse_capacity(&args.c, args.d)?;

    let max_rounds = match (args.max_rounds, &args.tape) {
        (Some(t), _) => t,
        (None, Some(path)) => load_tape(path)?.max_rounds(),
        (None, None) => {
            let bound = raes_core::analysis::termination_round_bound(
                g.n(),
                g.alpha(),
                cd as f64 / args.d as f64,
                3.0,
            );
            if bound.is_finite() && bound >= 1.0 {
                (2.0 * bound).ceil() as u32 + 4
            } else {
                64
            }
        }
    };
    let params = RaesParams::new(args.d, cd, max_rounds)?;
    let tape = match &args.tape {
        Some(path) => load_tape(path)?,
        None => fresh_tape(&g, &params, args.seed),
    };

    std::fs::create_dir_all(&args.out_dir)?;
    let outcome = run_raes(&g, &params, &tape)?;
    let tape_path = if args.binary_tape {
        let p = args.out_dir.join("tape.bin");
        save_tape_binary(&p, &tape)?;
        p
    } else {
        let p = args.out_dir.join("tape.json");
        save_tape_json(&p, &tape)?;
        p
    };
    save_trace(&args.out_dir.join("trace.json"), outcome.trace())?;

    match outcome {
        RaesOutcome::Terminated {
            trace,
            subgraph,
            stats,
        } => {
            save_subgraph(&args.out_dir.join("subgraph.json"), &subgraph)?;
            save_run_stats(&args.out_dir.join("stats.json"), &stats, args.seed)?;
            let _ = trace;
            println!(
                "terminated: rounds = {}, total requests = {}, messages = {} (tape: {})",
                stats.rounds_used,
                stats.total_requests,
                stats.total_messages,
                tape_path.display()
            );
            Ok(EXIT_OK)
        }
        RaesOutcome::NotTerminated { trace } => {
            println!(
                "did not terminate within {} rounds (trace written; tape: {})",
                trace.rounds.len(),
                tape_path.display()
            );
            Ok(EXIT_NOT_TERMINATED)
        }
    }
}
