//! `midselect` command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input (flags, files, size guard),
//! 2 failure while running.

mod commands;
mod manifest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "midselect", version, about = "Mid-circuit post-selection circuits and QAOA noise experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Build a validity filter circuit and write it as JSON.
    Build(BuildArgs),
    /// Check a filter against its validity predicate on every basis state.
    VerifyEncoding(VerifyArgs),
    /// Exhaustive spectrum of a TSP instance.
    Spectrum(SpectrumArgs),
    /// Simulate one QAOA circuit on a TSP instance.
    Simulate(SimulateArgs),
    /// Random-angle study of the energy change from mid-circuit post-selection.
    DeltaE(DeltaEArgs),
    /// Optimization study with and without mid-circuit post-selection.
    OptimizeExp(OptimizeArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Encoding {
    Khot,
    Onehot,
    Wall,
    Binary,
    Gray,
    Mixed,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    /// Multi-controlled gates on their own wires only.
    Free,
    /// Shared pool of borrowed ancillas.
    Anc,
    /// Fresh ancillas for every multi-controlled gate.
    MultiAnc,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct EncodingArgs {
    #[arg(long, value_enum)]
    pub encoding: Encoding,
    /// Register width (khot, onehot, wall, binary, gray).
    #[arg(long)]
    pub n: Option<usize>,
    /// Hamming weight for khot.
    #[arg(long)]
    pub k: Option<usize>,
    /// Inclusive upper bound for binary and gray.
    #[arg(long)]
    pub mu: Option<u64>,
    /// Number of blocks for mixed.
    #[arg(long)]
    pub l: Option<usize>,
    /// Bits per block for mixed.
    #[arg(long)]
    pub m: Option<usize>,
    /// Optional bound on the last block of a mixed register.
    #[arg(long)]
    pub mu_last: Option<u64>,
    /// Filter variant, e.g. single, log, compression, parallel, inductive,
    /// exact, sigma1, siglog, store.
    #[arg(long)]
    pub variant: Option<String>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct BuildArgs {
    #[command(flatten)]
    pub encoding: EncodingArgs,
    /// Check only the first c zero bits of μ (binary only).
    #[arg(long)]
    pub partial_checks: Option<usize>,
    /// Lower to {1-qubit, CNOT} with this multi-control strategy.
    #[arg(long, value_enum)]
    pub transpile: Option<Strategy>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub encoding: EncodingArgs,
    /// Circuit to check; built from the encoding flags when absent.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Use the reduced model with city 0 fixed at time 0.
    #[arg(long)]
    pub reduced: bool,
    /// Largest number of variables to enumerate.
    #[arg(long, default_value_t = 24)]
    pub max_vars: usize,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct GuardArgs {
    /// Refuse circuits wider than this.
    #[arg(long, default_value_t = 14)]
    pub max_qubits: usize,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub layers: usize,
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    /// none, depol, ampdamp or randx.
    #[arg(long, default_value = "none")]
    pub noise: String,
    /// Post-select onto the feasible subspace after every K layers.
    #[arg(long)]
    pub postselect_every: Option<usize>,
    /// JSON array of 2·layers angles (p and r per layer); drawn from --seed when absent.
    #[arg(long)]
    pub angles: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip the final feasibility filter.
    #[arg(long)]
    pub no_final_postselect: bool,
    #[command(flatten)]
    pub guard: GuardArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct StudyArgs {
    #[arg(long, default_value_t = 3)]
    pub cities: usize,
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    #[arg(long, default_value_t = 0.01)]
    pub gamma: f64,
    #[arg(long, default_value = "randx")]
    pub noise: String,
    #[arg(long, default_value_t = 4)]
    pub stride: usize,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    /// Worker threads; falls back to MIDSELECT_WORKERS, then the core count.
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub guard: GuardArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DeltaEArgs {
    #[command(flatten)]
    pub study: StudyArgs,
    /// Layer counts: a range `a..b` (inclusive) or a comma list.
    #[arg(long, default_value = "4,8,12")]
    pub layers: String,
    /// Full-scale study: N=4, 100 instances, layers 1..40, all three noise families.
    #[arg(long)]
    pub full: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub study: StudyArgs,
    /// inject, co or re.
    #[arg(long)]
    pub scenario: String,
    #[arg(long, default_value_t = 8)]
    pub layers: usize,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded location.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

pub fn invalid(msg: impl std::fmt::Display) -> CliError {
    CliError::Invalid(msg.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
