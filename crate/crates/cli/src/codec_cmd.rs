use std::path::PathBuf;

use clap::{Args, Subcommand};
use raes_core::codec::{cost_report, decode_execution, encode_execution};
use raes_core::formats::{
    load_encoding, load_graph, load_tape, load_trace, save_encoding, save_tape_binary,
    save_tape_json, save_trace,
};
use raes_core::graph::second_eigenvalue;

use crate::{classify_codec_error, parse_node_set, CliError, EXIT_OK};

#[derive(Subcommand)]
pub enum CodecCommand {
    /// Compress the execution randomness relative to a set S.
    Encode(EncodeArgs),
    /// Reconstruct the tape (and trace) from an encoding.
    Decode(DecodeArgs),
    /// Encode, decode, and check the roundtrip is the identity.
    Verify(EncodeArgs),
    /// Print the bit-cost ledger for an execution.
    Cost(CostArgs),
}

#[derive(Args)]
pub struct EncodeArgs {
    #[arg(short = 'g', long)]
    graph: PathBuf,
    #[arg(long)]
    trace: PathBuf,
    /// Tape file (JSON or binary); carries the unused randomness the trace
    /// alone does not determine.
    #[arg(long)]
    tape: PathBuf,
    /// The set S, comma-separated node ids.
    #[arg(long)]
    set: String,
    /// Output path (encode only).
    #[arg(short = 'o', long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct DecodeArgs {
    #[arg(short = 'g', long)]
    graph: PathBuf,
    /// Encoding file.
    #[arg(short = 'i', long = "in")]
    input: PathBuf,
    /// Where to write the reconstructed tape.
    #[arg(long)]
    tape_out: PathBuf,
    /// Optionally write the replayed trace too.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Write the tape in packed binary form.
    #[arg(long)]
    binary: bool,
}

#[derive(Args)]
pub struct CostArgs {
    #[arg(short = 'g', long)]
    graph: PathBuf,
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    tape: PathBuf,
    #[arg(long)]
    set: String,
    /// λ⁺ = max(λ₂, 0) of the input graph; computed by power iteration
    /// when omitted.
    #[arg(long)]
    lambda2_plus: Option<f64>,
}

pub fn run(cmd: CodecCommand) -> Result<i32, CliError> {
    match cmd {
        CodecCommand::Encode(args) => {
            let out = args
                .out
                .clone()
                .ok_or_else(|| CliError::usage("encode needs -o <path>"))?;
            let (g, params, tape, trace, s_set) = load_inputs(&args)?;
            let (enc, report) = encode_execution(&g, &params, &tape, &trace, &s_set)
                .map_err(classify_codec_error)?;
            save_encoding(&out, &enc)?;
            println!(
                "wrote {} ({} bits; raw {} fractional bits)",
                out.display(),
                enc.bits.len(),
                report.raw_total_fractional
            );
            Ok(EXIT_OK)
        }
        CodecCommand::Decode(args) => {
            let g = load_graph(&args.graph)?;
            let enc = load_encoding(&args.input)?;
            let (tape, trace) = decode_execution(&g, &enc).map_err(classify_codec_error)?;
            if args.binary {
                save_tape_binary(&args.tape_out, &tape)?;
            } else {
                save_tape_json(&args.tape_out, &tape)?;
            }
            if let Some(path) = &args.trace_out {
                save_trace(path, &trace)?;
            }
            println!("decoded tape to {}", args.tape_out.display());
            Ok(EXIT_OK)
        }
        CodecCommand::Verify(args) => {
            let (g, params, tape, trace, s_set) = load_inputs(&args)?;
            let (enc, report) = encode_execution(&g, &params, &tape, &trace, &s_set)
                .map_err(classify_codec_error)?;
            let (tape2, trace2) = decode_execution(&g, &enc).map_err(classify_codec_error)?;
            if tape2 != tape || trace2 != trace {
                return Err(CliError::internal(
                    "decode(encode(execution)) is not the identity",
                ));
            }
            println!(
                "ROUNDTRIP OK ({} bits, {} sections sum exactly)",
                enc.bits.len(),
                report.actual_sum()
            );
            println!(
                "savings expression at (n={}, s={}, d={}, eps={:.6}): {:.3} bits",
                report.n, report.s, report.d, report.eps, report.savings
            );
            Ok(EXIT_OK)
        }
        CodecCommand::Cost(args) => {
            let g = load_graph(&args.graph)?;
            let trace = load_trace(&args.trace)?;
            let tape = load_tape(&args.tape)?;
            let s_set = parse_node_set(&args.set)?;
            let params = trace.params;
            let lambda2_plus = match args.lambda2_plus {
                Some(l) => l,
                None => {
                    second_eigenvalue(&g, 1e-10, 100_000)
                        .map_err(|e| CliError::usage(e.to_string()))?
                        .lambda2_plus
                }
            };
            let report = cost_report(&g, &params, &tape, &trace, &s_set, lambda2_plus)
                .map_err(classify_codec_error)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(EXIT_OK)
        }
    }
}

fn load_inputs(
    args: &EncodeArgs,
) -> Result<
    (
        raes_core::graph::Graph,
        raes_core::protocol::RaesParams,
        raes_core::protocol::RandomTape,
        raes_core::protocol::ExecutionTrace,
        Vec<u32>,
    ),
    CliError,
> {
    let g = load_graph(&args.graph)?;
    let trace = load_trace(&args.trace)?;
    let tape = load_tape(&args.tape)?;
    let s_set = parse_node_set(&args.set)?;
    let params = trace.params;
    Ok((g, params, tape, trace, s_set))
}
