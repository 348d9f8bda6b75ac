use std::path::PathBuf;

use clap::Args;
use raes_core::analysis::{
    exact_expansion_with_limit, sampled_expansion, spectral_expansion_lower_bound,
    DEFAULT_EXHAUSTIVE_LIMIT,
};
use raes_core::formats::load_subgraph;

use crate::{CliError, EXIT_OK};

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Subgraph JSON produced by `raes run`.
    #[arg(long)]
    subgraph: PathBuf,
    /// exact, sampled or spectral.
    #[arg(long, default_value = "exact")]
    mode: String,
    /// Sample count for --mode sampled.
    #[arg(long, default_value_t = 1000)]
    trials: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exhaustive enumeration limit for --mode exact.
    #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_LIMIT)]
    limit: usize,
    /// Collapse parallel edges before measuring.
    #[arg(long)]
    simple: bool,
}

pub fn run(args: AnalyzeArgs) -> Result<i32, CliError> {
    let mut h = load_subgraph(&args.subgraph)?;
    if args.simple {
        h = h.simplified();
    }
    let report = match args.mode.as_str() {
        "exact" => exact_expansion_with_limit(&h, args.limit)?,
        "sampled" => sampled_expansion(&h, args.trials, args.seed)?,
        "spectral" => spectral_expansion_lower_bound(&h)?,
        other => {
            return Err(CliError::usage(format!(
                "unknown mode {other}; expected exact, sampled or spectral"
            )))
        }
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(EXIT_OK)
}
