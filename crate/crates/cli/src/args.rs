use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "levymarket", version, about = "Lévy-flight market model and Wishart spectral analysis")]
pub struct Cli {
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a walker ensemble and write it as a wide price CSV.
    Simulate(SimulateArgs),
    /// Run the analysis pipeline and write report.json plus per-analysis CSVs.
    Analyze(AnalyzeArgs),
    /// Compare two report.json files point by point.
    Compare(CompareArgs),
    /// Build (or load from cache) the Monte Carlo TW1 reference.
    TwReference(TwArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Distance from the origin.
    R,
    /// Cumulative path length.
    L,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "r")]
    pub kind: Kind,
    #[arg(long, default_value_t = 1.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 7740)]
    pub n_steps: usize,
    #[arg(long, default_value_t = 262)]
    pub n_walkers: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Panel index within the seed's ensemble sequence.
    #[arg(long, default_value_t = 0)]
    pub panel: usize,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    SimulateR,
    SimulateL,
    Empirical,
}

#[derive(Debug, Default, Args)]
pub struct AnalyzeArgs {
    /// TOML file with any of the run settings; flags override it.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub source: Option<SourceArg>,
    /// Wide price CSV for `--source empirical`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n_steps: Option<usize>,
    #[arg(long)]
    pub n_walkers: Option<usize>,
    #[arg(long)]
    pub n_panels: Option<usize>,
    /// Epoch lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<usize>>,
    /// Epoch lengths for GEV fits, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub evt_t: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short, long)]
    pub output_dir: Option<PathBuf>,
    /// Subset of geometry,psd,returns_dist,elements,spectra,evt,shuffle.
    #[arg(long, value_delimiter = ',')]
    pub analyses: Option<Vec<String>>,
    #[arg(long)]
    pub overlap: Option<bool>,
    #[arg(long)]
    pub max_missing_fraction: Option<f64>,
    #[arg(long)]
    pub max_pairs: Option<usize>,
    #[arg(long)]
    pub rescale_exponent: Option<f64>,
    #[arg(long)]
    pub tw_matrices: Option<usize>,
    #[arg(long)]
    pub tw_size: Option<usize>,
    #[arg(long)]
    pub tw_cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub report_a: PathBuf,
    pub report_b: PathBuf,
    /// Write the comparison JSON here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TwArgs {
    #[arg(long, default_value_t = 5000)]
    pub n_matrices: usize,
    #[arg(long, default_value_t = 500)]
    pub size: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub budget: Option<u64>,
    /// Directory for the cached reference table.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}
