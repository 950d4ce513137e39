use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "sqzlab", version, about = "Model, fit, simulate and design cavity-enhanced squeezed-light sources")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Model noise spectra over a frequency span.
    Spectrum(SpectrumArgs),
    /// Joint fit of squeezed and anti-squeezed traces.
    Fit(FitArgs),
    /// Pump build-up factor and impedance matching.
    Buildup(BuildupArgs),
    /// Detection efficiency budget.
    Budget(BudgetArgs),
    /// External pump power needed for a squeezing target.
    Design(DesignArgs),
    /// Synthetic spectrum-analyzer traces.
    Simulate(SimulateArgs),
    /// Double-resonance operating-point scan.
    Coresonance(CoresonanceArgs),
    /// Render trace CSV files as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Table,
    Svg,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub eta: f64,
    /// Cavity linewidth κ/2π.
    #[arg(long)]
    pub fwhm_hz: f64,
    /// Pump parameter; repeat for several curves.
    #[arg(long = "epsilon", required = true)]
    pub epsilons: Vec<f64>,
    #[arg(long, default_value_t = 1e6)]
    pub start_hz: f64,
    #[arg(long, default_value_t = 100e6)]
    pub stop_hz: f64,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// Space points logarithmically.
    #[arg(long)]
    pub log: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KappaParam {
    DecayRate,
    Fwhm,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Trace CSV files. The i-th squeezed and i-th anti-squeezed trace form
    /// dataset i.
    #[arg(required = true)]
    pub traces: Vec<PathBuf>,
    /// Additional exclusion window `START:STOP` in Hz.
    #[arg(long = "exclude")]
    pub exclude: Vec<String>,
    /// Drop the default 16.5–18.5 MHz lock-modulation window.
    #[arg(long)]
    pub no_lock_exclusion: bool,
    #[arg(long, value_enum, default_value_t = KappaParam::DecayRate)]
    pub kappa_param: KappaParam,
    #[arg(long, default_value = "analytic")]
    pub jacobian: String,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Write per-point residuals to this CSV file.
    #[arg(long)]
    pub residuals: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CouplerArgs {
    #[arg(long, default_value_t = 0.975)]
    pub r1: f64,
    #[arg(long, default_value_t = 0.99955)]
    pub r2: f64,
    #[arg(long, default_value_t = 0.9995)]
    pub v_ar: f64,
    #[arg(long, default_value_t = 0.99985)]
    pub v_ktp: f64,
}

#[derive(Debug, Args)]
pub struct BuildupArgs {
    #[command(flatten)]
    pub cavity: CouplerArgs,
    /// Also evaluate the cavity with this coupler reflectivity.
    #[arg(long)]
    pub new_r1: Option<f64>,
    /// Absolute tolerance applied to R₁, R₂, V_AR and V_KTP for an interval.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BudgetFlags {
    #[arg(long, default_value_t = 0.99)]
    pub visibility: f64,
    #[arg(long, default_value_t = 0.99)]
    pub eta_pd: f64,
    #[arg(long, default_value_t = 0.99)]
    pub eta_pr: f64,
    /// Coupler transmission 1 − R₁.
    #[arg(long, default_value_t = 0.15)]
    pub t1: f64,
    /// Intracavity round-trip loss.
    #[arg(long, default_value_t = 0.001)]
    pub loss: f64,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    #[command(flatten)]
    pub budget: BudgetFlags,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub target_db: f64,
    /// Sideband frequency.
    #[arg(long = "f")]
    pub f_hz: f64,
    #[arg(long, default_value_t = 109.8e6)]
    pub fwhm_hz: f64,
    /// Total detection efficiency; computed from the budget flags when absent.
    #[arg(long)]
    pub eta: Option<f64>,
    #[command(flatten)]
    pub budget: BudgetFlags,
    /// Threshold measured on the current cavity.
    #[arg(long, default_value_t = 14.0)]
    pub p_thrs_mw: f64,
    #[command(flatten)]
    pub cavity: CouplerArgs,
    #[arg(long)]
    pub new_r1: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Strict TOML configuration; flags below override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub fwhm_hz: Option<f64>,
    #[arg(long = "epsilon")]
    pub epsilons: Vec<f64>,
    /// `video-average`, `gaussian-db` or `noiseless`.
    #[arg(long)]
    pub statistics: Option<String>,
    #[arg(long)]
    pub sigma_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub dark_clearance_db: Option<f64>,
    #[arg(long)]
    pub rbw_hz: Option<f64>,
    #[arg(long)]
    pub vbw_hz: Option<f64>,
    #[arg(long)]
    pub start_hz: Option<f64>,
    #[arg(long)]
    pub stop_hz: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CoresonanceArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Number of best-scoring points to list.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Write every accepted point to this CSV file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub log_x: bool,
    #[arg(long)]
    pub title: Option<String>,
}
