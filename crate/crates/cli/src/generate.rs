use std::path::PathBuf;

use clap::Args;
use raes_core::formats::save_graph;
use raes_core::graph::{gen_circulant, gen_complete, gen_complete_bipartite, gen_random_regular};

use crate::{CliError, EXIT_OK};

#[derive(Args)]
pub struct GenerateArgs {
    /// Graph family: complete, bipartite, circulant or regular.
    #[arg(long)]
    family: String,
    /// Total node count (for bipartite: both sides together, must be even).
    #[arg(long)]
    n: usize,
    /// Degree for the random regular family.
    #[arg(long)]
    delta: Option<u32>,
    /// Circulant offsets, e.g. 1,2; the closure under negation is applied.
    #[arg(long)]
    offsets: Option<String>,
    /// Seed for randomized generators.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output graph JSON path.
    #[arg(short = 'o', long = "out")]
    out: PathBuf,
}

pub fn run(args: GenerateArgs) -> Result<i32, CliError> {
    let g = match args.family.as_str() {
        "complete" => gen_complete(args.n)?,
        "bipartite" => {
            if args.n % 2 != 0 {
                return Err(CliError::usage("bipartite family needs an even n"));
            }
            gen_complete_bipartite(args.n / 2)?
        }
        "circulant" => {
            let text = args
                .offsets
                .ok_or_else(|| CliError::usage("circulant family needs --offsets"))?;
            let offsets: Vec<usize> = text
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<usize>()
                        .map_err(|_| CliError::usage(format!("bad offset: {p}")))
                })
                .collect::<Result<_, _>>()?;
            gen_circulant(args.n, &offsets)?
        }
        "regular" => {
            let delta = args
                .delta
                .ok_or_else(|| CliError::usage("regular family needs --delta"))?;
            gen_random_regular(args.n, delta, args.seed)?
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown family {other}; expected complete, bipartite, circulant or regular"
            )))
        }
    };
    save_graph(&args.out, &g)?;
    println!(
        "wrote {} (n = {}, delta = {})",
        args.out.display(),
        g.n(),
        g.delta()
    );
    Ok(EXIT_OK)
}
