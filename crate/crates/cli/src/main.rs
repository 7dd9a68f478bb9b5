mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use unmix_core::bss::TechniqueId;
use unmix_core::synth::{IntensityModel, Normalization};

/// Blind source separation for signed NMR spectral datasets.
#[derive(Debug, Parser)]
#[command(name = "unmix", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the pure-component library over a parameter grid.
    GeneratePure(GeneratePure),
    /// Mix library components into synthetic datasets.
    GenerateMixtures(GenerateMixtures),
    /// Run one separation technique on a dataset.
    Decompose(Decompose),
    /// Match predicted components to pure components.
    Score(Score),
    /// Run a benchmark plan and write the aggregate tables.
    Bench(Bench),
}

#[derive(Debug, clap::Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 1024)]
    pub n_points: usize,
    #[arg(long, default_value_t = 10_000.0)]
    pub sweep_width_hz: f64,
    #[arg(long, default_value_t = 100e6)]
    pub larmor_hz: f64,
    #[arg(long, default_value_t = 0.0)]
    pub center_hz: f64,
}

#[derive(Debug, clap::Args)]
pub struct GeneratePure {
    /// Grid spec JSON file, or `standard` (32,000 components) or `desk`
    /// (1,600 components).
    #[arg(long)]
    pub grid_spec: String,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Overwrite an existing output file.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, clap::Args)]
pub struct GenerateMixtures {
    #[arg(long)]
    pub library: PathBuf,
    #[arg(long)]
    pub model: IntensityModel,
    /// Standard deviation of the added Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Number of datasets to write.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Pure components per dataset.
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..=10))]
    pub components: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; files are named `mixture_NNN.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a CSV export next to each dataset.
    #[arg(long)]
    pub csv: bool,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, clap::Args)]
pub struct Decompose {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_technique)]
    pub technique: TechniqueId,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value = "none")]
    pub normalization: Normalization,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the components as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, clap::Args)]
pub struct Score {
    /// Components file from `decompose`.
    #[arg(long)]
    pub predicted: PathBuf,
    /// Library file, or a dataset file whose rows are the pure spectra.
    #[arg(long)]
    pub pure: PathBuf,
    /// Take the pure ids from this mixture's provenance (library input).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Comma-separated pure ids (library input).
    #[arg(long, value_delimiter = ',')]
    pub ids: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for SVG overlays of every matched pair.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, clap::Args)]
pub struct Bench {
    /// Plan JSON file, or `desk` or `full` for the built-in plans.
    #[arg(long)]
    pub plan: String,
    #[arg(long)]
    pub library: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "UNMIX_WORKERS")]
    pub workers: Option<usize>,
    /// Continue an interrupted run in `--out`.
    #[arg(long)]
    pub resume: bool,
    /// Discard earlier results in `--out`.
    #[arg(long, conflicts_with = "resume")]
    pub force: bool,
    /// Override the plan's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_technique(s: &str) -> Result<TechniqueId, String> {
    s.parse().map_err(|e: unmix_core::Error| match e {
        unmix_core::Error::InvalidArgument(m) => m,
        other => other.to_string(),
    })
}

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<unmix_core::Error> for CliError {
    fn from(e: unmix_core::Error) -> Self {
        use unmix_core::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidArgument(_) => CliError::Usage(msg),
            E::Format(_) | E::Io(_) | E::DegenerateRow(_) | E::DegenerateFit => CliError::Data(msg),
            E::NumericalFailure(_) | E::TechniqueFailure(_) | E::Undefined(_) => CliError::Numerical(msg),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GeneratePure(a) => commands::generate_pure(a),
        Command::GenerateMixtures(a) => commands::generate_mixtures(a),
        Command::Decompose(a) => commands::decompose(a),
        Command::Score(a) => commands::score(a),
        Command::Bench(a) => commands::bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
