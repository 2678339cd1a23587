use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::SurrogateKind;

/// Local surrogate explanations: neighbourhood strategies, surrogates and the
/// exact Shapley oracle on tabular binary classifiers.
#[derive(Debug, Parser)]
#[command(name = "locality", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a half-moons dataset as CSV.
    GenData(GenDataArgs),
    /// Train the MLP black box on a labeled CSV.
    Train(TrainArgs),
    /// Explain one instance with one method.
    Explain(ExplainArgs),
    /// Explain one instance with several methods and draw their neighbourhoods side by side.
    Compare(CompareArgs),
    /// Exact Shapley values by enumerating every coalition.
    ShapleyExact(ShapleyExactArgs),
}

#[derive(Debug, Args)]
struct GenDataArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0.2)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    #[arg(long, default_value_t = 2000)]
    epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Inputs shared by every explaining command.
#[derive(Debug, Args)]
struct Target {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Row of the data to explain.
    #[arg(long)]
    index: usize,
    /// TOML run configuration.
    #[arg(long, env = "LOCALITY_CONFIG")]
    config: Option<PathBuf>,
    /// Root seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long)]
    method: String,
    #[arg(long, value_enum)]
    surrogate: Option<SurrogateKind>,
    /// Explanation document (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Single-panel SVG of the neighbourhood (2-D data only).
    #[arg(long)]
    plot: Option<PathBuf>,
    /// KernelSHAP regression problem as CSV.
    #[arg(long)]
    dump_problem: Option<PathBuf>,
    /// Neighbourhood points, weights and labels as CSV.
    #[arg(long)]
    out_neighbourhood: Option<PathBuf>,
    /// JSON sidecar describing the written neighbourhood.
    #[arg(long, requires = "out_neighbourhood")]
    out_neighbourhood_meta: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    target: Target,
    /// Comma-separated method list, in panel order.
    #[arg(long, value_delimiter = ',', default_value = "lime,gsls,lore,leap,kernelshap,palex")]
    methods: Vec<String>,
    #[arg(long)]
    out_panel: PathBuf,
    /// Attribution table CSV.
    #[arg(long)]
    out_table: PathBuf,
    /// Rule listings of tree surrogates.
    #[arg(long)]
    out_rules: Option<PathBuf>,
    /// Grouped attribution bar chart SVG.
    #[arg(long)]
    out_bars: Option<PathBuf>,
    /// Directory receiving one `<method>.csv` neighbourhood per method.
    #[arg(long)]
    out_neighbourhoods: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ShapleyExactArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(a) => commands::gen_data(a),
        Command::Train(a) => commands::train(a),
        Command::Explain(a) => commands::explain(a),
        Command::Compare(a) => commands::compare(a),
        Command::ShapleyExact(a) => commands::shapley_exact(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
