//! Command-line front end: graph generation, protocol runs, analysis,
//! the randomness codec, and batch experiments, all file-based and
//! reproducible from explicit seeds.
//!
//! Exit codes: 0 success (and terminated runs), 1 usage or validation
//! error, 2 run did not terminate within the round budget, 3 internal
//! assertion failure.

mod analyze;
mod codec_cmd;
mod experiment;
mod generate;
mod run;

use clap::{Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_TERMINATED: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Errors carry the exit code they map to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> CliError {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> CliError {
        CliError {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> CliError {
        CliError::usage(e.to_string())
    }
}

/// Maps library errors onto exit codes: internal assertions become code 3,
/// everything else is a validation failure.
pub fn classify_codec_error(e: raes_core::codec::CodecError) -> CliError {
    use raes_core::codec::CodecError;
    match &e {
        CodecError::Internal(_) => CliError::internal(e.to_string()),
        CodecError::Analysis(raes_core::analysis::AnalysisError::ClassificationViolation {
            ..
        }) => CliError::internal(e.to_string()),
        _ => CliError::usage(e.to_string()),
    }
}

#[derive(Parser)]
#[command(
    name = "raes",
    about = "Sparsify dense regular expanders with the RAES request/accept protocol",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a regular graph and write it as JSON.
    Generate(generate::GenerateArgs),
    /// Run the protocol on a graph, writing trace, subgraph, tape and stats.
    Run(run::RunArgs),
    /// Measure expansion of a produced subgraph.
    Analyze(analyze::AnalyzeArgs),
    /// Encode, decode, verify or cost-account execution randomness.
    #[command(subcommand)]
    Codec(codec_cmd::CodecCommand),
    /// Batch experiments over a parameter grid.
    #[command(subcommand)]
    Experiment(experiment::ExperimentCommand),
}

fn main() {
    // RAES_THREADS caps trial-level parallelism.
    if let Ok(threads) = std::env::var("RAES_THREADS") {
        if let Ok(k) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build_global();
        }
    }

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let result = match cli.command {
        Command::Generate(args) => generate::run(args),
        Command::Run(args) => run::run(args),
        Command::Analyze(args) => analyze::run(args),
        Command::Codec(cmd) => codec_cmd::run(cmd),
        Command::Experiment(cmd) => experiment::run(cmd),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            std::process::exit(e.code);
        }
    }
}

/// Parses c given as an integer or a fraction "p/q"; returns the integer
/// capacity c·d.
pub fn parse_capacity(c: &str, d: u32) -> Result<u32, CliError> {
    let (num, den) = match c.split_once('/') {
        Some((p, q)) => {
            let p: u64 = p
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("bad rational c: {c}")))?;
            let q: u64 = q
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("bad rational c: {c}")))?;
            if q == 0 {
                return Err(CliError::usage("c denominator must be nonzero"));
            }
            (p, q)
        }
        None => (
            c.trim()
                .parse()
                .map_err(|_| CliError::usage(format!("bad c: {c} (use an integer or p/q)")))?,
            1,
        ),
    };
    let cd = num * d as u64;
    if cd == 0 || cd % den != 0 {
        return Err(CliError::usage(format!(
            "capacity c·d = {num}/{den}·{d} must be a positive integer"
        )));
    }
    let cd = cd / den;
    u32::try_from(cd).map_err(|_| CliError::usage("capacity c·d too large"))
}

/// Parses a comma-separated node set.
pub fn parse_node_set(text: &str) -> Result<Vec<u32>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<u32>()
                .map_err(|_| CliError::usage(format!("bad node id: {part}")))
        })
        .collect()
}
