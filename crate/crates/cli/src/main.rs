use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod run;
mod source;

/// Finite-resolution shadowing, recurrence and network analysis on a zoo of
/// one-dimensional systems.
#[derive(Parser, Debug)]
#[command(name = "shadowlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Recurrence report and chain-recurrent versus minimal-closure verdict.
    Analyze(Common),
    /// Shadowing, multishadowing or subsequence shadowing of a pseudotrajectory.
    Shadow(ShadowArgs),
    /// Build and verify an almost-invariant eps-network.
    Network(NetworkArgs),
    /// Full-support approximately invariant measure and recurrent fractions.
    Measure(MeasureArgs),
    /// List the built-in systems.
    Zoo,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// System selector, e.g. `rotation:alpha=0.25` or `north_south:h=0.05`.
    #[arg(long)]
    pub system: String,
    /// Grid mesh.
    #[arg(long, default_value_t = 0.01)]
    pub mesh: f64,
    /// Pseudotrajectory / transition-graph error bound.
    #[arg(long, default_value_t = 0.01)]
    pub d: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Orbit horizon.
    #[arg(long, default_value_t = 10_000)]
    pub horizon: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output root; each run writes to a subdirectory named by its
    /// configuration hash.
    #[arg(long, env = "SHADOWLAB_OUT", default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowMode {
    Shadow,
    Multishadow,
    Subsequence,
}

#[derive(Args, Debug, Clone)]
pub struct ShadowArgs {
    #[command(flatten)]
    pub common: Common,
    /// Pseudotrajectory CSV (`k,x0` rows); a sidecar with the same stem and
    /// a .json extension is used when present.
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    pub pseudo: Option<PathBuf>,
    /// Generator: `noisy[:x0=..,len=..]`, `exact[:x0=..,len=..]`,
    /// `winding[:turns=..]` or `drift[:x0=..,steps=..]`.
    #[arg(long)]
    pub gen: Option<String>,
    /// Largest number of orbits in a multishadow.
    #[arg(long, default_value_t = 10)]
    pub budget: usize,
    #[arg(long, value_enum, default_value_t = ShadowMode::Multishadow)]
    pub mode: ShadowMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkMode {
    /// Orbit pieces of minimal-consistent points.
    Minimal,
    /// Multishadowed periodic chains of the transition graph.
    Chains,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainArg {
    Space,
    Cr,
}

#[derive(Args, Debug, Clone)]
pub struct NetworkArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = NetworkMode::Minimal)]
    pub mode: NetworkMode,
    /// Region the network must cover.
    #[arg(long, value_enum, default_value_t = DomainArg::Space)]
    pub domain: DomainArg,
    /// Horizon of the recurrence report behind the construction.
    #[arg(long, default_value_t = 10_000)]
    pub report_horizon: u64,
    /// Orbit budget per chain in chain mode.
    #[arg(long, default_value_t = 8)]
    pub budget: usize,
    /// Also check negative iterates (invertible systems only).
    #[arg(long)]
    pub two_sided: bool,
    /// Greedily drop redundant points after verification.
    #[arg(long)]
    pub minimize: bool,
}

#[derive(Args, Debug, Clone)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub common: Common,
    /// Network scales eps_m = 2^-m for m = 1..=levels.
    #[arg(long, default_value_t = 6)]
    pub levels: u32,
    #[arg(long, default_value_t = 10_000)]
    pub report_horizon: u64,
    /// Length of the noisy pseudotrajectories behind the recurrent fractions.
    #[arg(long, default_value_t = 100_000)]
    pub len: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(c) => commands::analyze(&c),
        Command::Shadow(a) => commands::shadow(&a),
        Command::Network(a) => commands::network(&a),
        Command::Measure(a) => commands::measure(&a),
        Command::Zoo => commands::zoo(),
    };
    match result {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
