use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "wgl", version, about = "Gamma approximation on the second Wiener chaos")]
pub struct Cli {
    /// JSON file whose keys fill in flags not given on the command line.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Worker threads for the parallel library routines.
    #[arg(long, global = true, env = "WGL_THREADS")]
    #[serde(skip)]
    pub threads: Option<usize>,

    /// Leave the wall-clock timestamp out of JSON output.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub no_timestamp: bool,

    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    #[serde(skip)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Exact cumulants of a spectrum.
    Cumulants(CumulantArgs),
    #[command(subcommand)]
    Bound(BoundCommand),
    #[command(subcommand)]
    Stein(SteinCommand),
    #[command(subcommand)]
    Distance(DistanceCommand),
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Where a spectrum comes from: a JSON file, a literal list, or a named example.
#[derive(Debug, Args, Serialize)]
pub struct FormSource {
    /// JSON file `{"eigenvalues": [...]}`.
    #[arg(long, conflicts_with_all = ["eigenvalues", "example"])]
    pub spec: Option<PathBuf>,

    /// Comma-separated eigenvalues.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "example")]
    pub eigenvalues: Option<Vec<f64>>,

    /// Named example sequence; the spectrum is rescaled to `sum c^2 = nu`.
    #[arg(long, value_enum, requires = "n")]
    pub example: Option<ExampleName>,

    /// Size of the example.
    #[arg(long)]
    pub n: Option<usize>,

    #[command(flatten)]
    pub params: ExampleParams,
}

#[derive(Debug, Args, Serialize)]
pub struct ExampleParams {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = BasisName::Trig)]
    pub basis: BasisName,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleName {
    Naive,
    Ustat,
    Ar1,
    Ar2,
    #[value(name = "holder_qf")]
    HolderQf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisName {
    Trig,
    Holder,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Mc,
    Quadrature,
}

#[derive(Debug, Args, Serialize)]
pub struct CumulantArgs {
    #[command(flatten)]
    pub form: FormSource,

    /// Target parameter; only used to rescale named examples and to report the gap.
    #[arg(long)]
    pub nu: Option<f64>,

    /// Cumulant orders.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    pub p: Vec<u32>,

    /// Emit JSON with metadata instead of bare numbers.
    #[arg(long)]
    pub json: bool,

    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundCommand {
    /// Cumulant distances and the upper-bound terms.
    Report(BoundArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct BoundArgs {
    #[command(flatten)]
    pub form: FormSource,

    #[arg(long)]
    pub nu: f64,

    /// Rescale a `--spec` or `--eigenvalues` spectrum to `sum c^2 = nu` first.
    #[arg(long)]
    pub normalize: bool,

    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SteinCommand {
    /// Solve the Stein equation for one test function.
    Solve(SteinArgs),
    /// Solve `g + lambda S(g) = h`.
    Fredholm(FredholmArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SteinTarget {
    #[arg(long)]
    pub nu: f64,

    /// Test function: a JSON grid function file, `identity`, `sin:w` or `ramp:a,b`.
    #[arg(long = "h", allow_hyphen_values = true)]
    pub h: String,

    /// Grid `lo,hi,points` for named functions (default depends on nu).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, num_args = 1)]
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Args, Serialize)]
pub struct SteinArgs {
    #[command(flatten)]
    pub target: SteinTarget,

    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct FredholmArgs {
    #[command(flatten)]
    pub target: SteinTarget,

    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub lambda: f64,

    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceCommand {
    /// Lower estimate of d_2 over the smooth test family.
    D2(D2Args),
    /// Exact total variation for a two-eigenvalue spectrum against G(2).
    Tv(TvArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct D2Args {
    #[command(flatten)]
    pub form: FormSource,

    #[arg(long)]
    pub nu: f64,

    #[arg(long)]
    pub normalize: bool,

    #[arg(long, value_enum, default_value_t = MethodName::Mc)]
    pub method: MethodName,

    #[arg(long, default_value_t = 200_000)]
    pub draws: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 64)]
    pub family_size: usize,

    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct TvArgs {
    #[command(flatten)]
    pub form: FormSource,

    #[arg(long, default_value_t = 2.0)]
    pub nu: f64,

    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentCommand {
    /// Run an example sequence and fit log-log slopes.
    Run(ExperimentArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ExperimentArgs {
    #[arg(long, value_enum)]
    pub name: ExampleName,

    /// Comma-separated, strictly increasing sizes.
    #[arg(long = "n", value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,

    #[arg(long)]
    pub nu: f64,

    #[command(flatten)]
    pub params: ExampleParams,

    /// Monte Carlo draws for the empirical d_2 (0 skips it).
    #[arg(long, default_value_t = 0)]
    pub draws: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 64)]
    pub family_size: usize,

    /// Keep the two smallest sizes in the slope fits.
    #[arg(long)]
    pub include_small: bool,

    /// Also write the per-n table as CSV.
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,

    /// Also write gnuplot-ready columns.
    #[arg(long)]
    #[serde(skip)]
    pub gnuplot: Option<PathBuf>,

    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}
