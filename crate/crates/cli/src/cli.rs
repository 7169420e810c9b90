use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// FDA-MIMO transmit waveform design: validate scenarios, run the solvers,
/// and export spectra and pulse-compression profiles.
#[derive(Debug, Parser)]
#[command(name = "fda-waveopt", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a config and report spatial frequencies, range gates and the
    /// reference waveform's feasibility.
    Validate(ValidateArgs),
    /// Design waveforms for one or more similarity radii.
    Optimize(OptimizeArgs),
    /// Spatial-frequency power map (scene map, or the output map of a
    /// designed waveform) plus cuts.
    Spectrum(SpectrumArgs),
    /// Pulse-compression profile of one antenna's waveform.
    Pulse(PulseArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// TOML config, or `table12` for the bundled preset.
    pub config: PathBuf,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Mmadmm,
    Padmm,
}

impl Algo {
    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Mmadmm => "mmadmm",
            Algo::Padmm => "padmm",
        }
    }
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    pub config: PathBuf,
    #[arg(long, value_enum, default_value = "mmadmm")]
    pub algo: Algo,
    /// Similarity radii, comma separated. Each gets its own run.
    #[arg(long, value_delimiter = ',', default_value = "1.0", allow_hyphen_values = true)]
    pub eps: Vec<f64>,
    /// Penalty overrides; defaults come from the config's [solver] table.
    #[arg(long)]
    pub rho1: Option<f64>,
    #[arg(long)]
    pub rho2: Option<f64>,
    /// MM-ADMM only.
    #[arg(long)]
    pub rho3: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Recorded in the manifest. The solvers are deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for an ε sweep.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    pub config: PathBuf,
    /// Designed waveform. Without it the scene map of the reference is drawn.
    #[arg(long)]
    pub waveform: Option<PathBuf>,
    /// Receive weights; recomputed by MVDR when omitted.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Points per axis.
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    /// Range gate of the output map: `target` or a 1-based interference index.
    #[arg(long, default_value = "target")]
    pub gate: String,
    /// Receive frequency held fixed in the first cut (default: target's).
    #[arg(long, allow_hyphen_values = true)]
    pub cut_fr: Option<f64>,
    /// Transmit frequency held fixed in the second cut (default: target's).
    #[arg(long, allow_hyphen_values = true)]
    pub cut_ft: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    Hamming,
    None,
}

#[derive(Debug, Args)]
pub struct PulseArgs {
    pub config: PathBuf,
    /// Waveform file; the reference waveform when omitted.
    #[arg(long)]
    pub waveform: Option<PathBuf>,
    /// 1-based transmit antenna.
    #[arg(long, default_value_t = 1)]
    pub antenna: usize,
    #[arg(long, default_value_t = 1000)]
    pub upsample: usize,
    #[arg(long, value_enum, default_value = "hamming")]
    pub window: WindowArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}
