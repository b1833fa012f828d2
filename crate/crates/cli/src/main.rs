//! `lapcom` command-line runner: simulate, fit, postprocess, ppc, evaluate.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lapcom::data::InputFormat;
use lapcom::model::Variant;
use lapcom::sampler::InitMethod;

#[derive(Parser, Debug)]
#[command(name = "lapcom", version, about = "Bayesian co-clustering of multiplex networks")]
struct Cli {
    /// Upper bound on worker threads for any command.
    #[arg(long, env = "LAPCOM_THREADS", global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a multiplex from a built-in scenario or a spec file.
    Simulate(SimulateArgs),
    /// Run the sampler on a multiplex.
    Fit(FitArgs),
    /// Turn traces into point estimates and reconcile chains.
    Postprocess(PostprocessArgs),
    /// Posterior predictive checks for the selected chain.
    Ppc(PpcArgs),
    /// Compare a solution with the planted truth of a simulation.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    preset: Option<String>,
    /// JSON scenario description.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "edge-list")]
    format: FormatArg,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    EdgeList,
    AdjacencyCsv,
}

impl From<FormatArg> for InputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::EdgeList => InputFormat::EdgeList,
            FormatArg::AdjacencyCsv => InputFormat::AdjacencyCsv,
        }
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Multiplex directory (or file).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "edge-list")]
    format: FormatArg,
    /// Treat the input as directed when it has no manifest.
    #[arg(long)]
    directed: bool,
    /// JSON sampler settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    n_chains: usize,
    /// Chains run concurrently.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    /// Post-burn-in sweeps.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long, value_parser = parse_init)]
    init: Option<InitMethod>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Continue from checkpoints and keep finished chains.
    #[arg(long)]
    resume: bool,
    #[arg(long, default_value_t = 10_000, hide = true)]
    checkpoint_every: usize,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
}

fn parse_init(s: &str) -> Result<InitMethod, String> {
    s.parse()
}

#[derive(Args, Debug)]
struct PostprocessArgs {
    /// Fit output directories or single chain directories.
    #[arg(long, num_args = 1.., required = true)]
    traces: Vec<PathBuf>,
    /// Defaults to the data recorded by the fit.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PpcArgs {
    /// Postprocess output directory.
    #[arg(long)]
    solution: PathBuf,
    /// Fit output directory holding the selected chain.
    #[arg(long)]
    traces: PathBuf,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, short = 'r', default_value_t = 500)]
    replicates: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    solution: PathBuf,
    /// Simulate output directory holding `truth.json`.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let threads = match &cli.command {
        Command::Fit(a) => match (a.jobs, cli.threads) {
            (Some(j), Some(t)) => Some(j.min(t)),
            (j, t) => j.or(t),
        },
        _ => cli.threads,
    };
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Fit(a) => commands::fit(a),
        Command::Postprocess(a) => commands::postprocess(a),
        Command::Ppc(a) => commands::ppc(a),
        Command::Evaluate(a) => commands::evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
