use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "qwf",
    version,
    args_override_self = true,
    about = "Quantum-walk metrology: evolution, Fisher information, bounds and estimation"
)]
pub struct Cli {
    /// Key-value file (`key = value` per line) supplying defaults for any long flag.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Treat warnings as errors.
    #[arg(long, global = true)]
    pub strict: bool,

    /// Output path stem; `.csv` and `.json` are appended.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case", tag = "command")]
pub enum Command {
    /// Evolve a walker and write its final state and position distribution.
    #[command(allow_negative_numbers = true)]
    Evolve(EvolveArgs),
    /// Fisher and Uhlmann matrices by one or more routes.
    #[command(allow_negative_numbers = true)]
    Qfim(QfimArgs),
    /// Symmetric, incompatibility and Holevo bounds.
    #[command(allow_negative_numbers = true)]
    Bounds(BoundsArgs),
    /// Curve data for plots.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Physical case studies: forward map, QFIm, pullback and bounds.
    #[command(allow_negative_numbers = true)]
    Case(CaseArgs),
    /// Simulate position measurements and fit (θ, α) by maximum likelihood.
    #[command(allow_negative_numbers = true)]
    Estimate(EstimateArgs),
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct CoinArgs {
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct QuadArgs {
    /// Gauss-Legendre order per panel.
    #[arg(long, default_value_t = 16)]
    pub order: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-14)]
    pub abs_tol: f64,
    #[arg(long, default_value_t = 1 << 14)]
    pub max_panels: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub coin: CoinArgs,
    #[arg(long, default_value_t = 100)]
    pub t: u64,
    /// localized:X0[:spinor:RE0,IM0,RE1,IM1 | :bloch:RX,RY,RZ], entangled:X1,X2 or gamma:G
    #[arg(long, default_value = "localized:0")]
    pub init: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Analytic,
    Localized,
    Oracle,
}

#[derive(Debug, Args, Serialize)]
pub struct QfimArgs {
    #[command(flatten)]
    pub coin: CoinArgs,
    #[arg(long, default_value_t = 200)]
    pub t: u64,
    #[arg(long, default_value = "entangled:0,1")]
    pub init: String,
    /// Comma-separated routes; the first is the reference for deviations.
    #[arg(long, value_delimiter = ',', default_value = "analytic,oracle")]
    pub routes: Vec<Route>,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsRoute {
    Analytic,
    Oracle,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub coin: CoinArgs,
    #[arg(long, default_value_t = 200)]
    pub t: u64,
    #[arg(long, default_value = "entangled:0,1")]
    pub init: String,
    #[arg(long, value_enum, default_value = "analytic")]
    pub route: BoundsRoute,
    /// Weight matrix entries W11,W12,W22.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [1.0, 0.0, 1.0])]
    pub weights: Vec<f64>,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    #[value(alias = "fig1")]
    SingleQfi,
    #[value(alias = "fig2")]
    Holevo,
    #[value(alias = "prefactor-insets")]
    Insets,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub kind: SweepKind,
    /// Coin angle for single-qfi.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    pub theta: f64,
    /// Coin angles for holevo.
    #[arg(long, value_delimiter = ',', default_values_t = [std::f64::consts::FRAC_PI_4, 3.0 * std::f64::consts::FRAC_PI_8])]
    pub thetas: Vec<f64>,
    /// Rows for t = 1..=t-max.
    #[arg(long, default_value_t = 200)]
    pub t_max: u64,
    /// Add exact finite-t columns to single-qfi.
    #[arg(long)]
    pub oracle: bool,
    /// Interior θ points for the insets.
    #[arg(long, default_value_t = 99)]
    pub points: usize,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    Magnetic,
    Dirac,
}

#[derive(Debug, Args, Serialize)]
pub struct CaseArgs {
    #[arg(value_enum)]
    pub kind: CaseKind,
    #[arg(long, default_value_t = 0.3)]
    pub b2: f64,
    #[arg(long, default_value_t = 0.2)]
    pub b3: f64,
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Vector potential A_x.
    #[arg(long = "ax", alias = "Ax", alias = "a-x", default_value_t = 1.0)]
    pub a_x: f64,
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    #[arg(long, default_value_t = 200)]
    pub t: u64,
    #[arg(long, default_value = "entangled:0,1")]
    pub init: String,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    /// True coin used to simulate the data.
    #[command(flatten)]
    pub coin: CoinArgs,
    #[arg(long, default_value_t = 50)]
    pub t: u64,
    #[arg(long, default_value = "entangled:0,1")]
    pub init: String,
    #[arg(long, default_value_t = 100_000)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    #[arg(long, default_value_t = 0.05)]
    pub theta_min: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2 - 0.05)]
    pub theta_max: f64,
    #[arg(long, default_value_t = -std::f64::consts::PI)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 200)]
    pub grid_theta: usize,
    #[arg(long, default_value_t = 200)]
    pub grid_alpha: usize,
}
