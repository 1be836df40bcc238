//! Exact simulation.
//!
//! [`DensityState`] is the reference engine: a dense 2^n×2^n matrix evolved
//! gate by gate, with the noise channel applied on the wires of every gate and
//! post-selection kept as a renormalized branch with tracked acceptance.
//! [`Statevector`] handles noiseless runs over untranspiled circuits.

mod density;
mod noise;
mod statevector;
mod subspace;

pub use density::{run, run_from, DensityDump, DensityState};
pub use noise::{NoiseFamily, NoiseModel};
pub use statevector::{circuit_unitary, Statevector};
pub use subspace::SubspaceSpec;

use thiserror::Error;

/// Branch probabilities below this are treated as exact rejection.
pub const REJECT_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("post-selection rejected the branch (p = {0:e})")]
    Rejected(f64),
    #[error("`{0}` must be transpiled before density simulation")]
    NotTranspiled(&'static str),
    #[error("state has {state} qubits but the operation needs {needed}")]
    WidthMismatch { state: usize, needed: usize },
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("subspace is empty")]
    EmptySubspace,
    #[error("ideal state has weight outside the subspace")]
    NotInSubspace,
    #[error("{0} is not supported on a statevector")]
    Unsupported(&'static str),
    #[error("{n} qubits exceeds the limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("basis index {index} out of range for {n} qubits")]
    BadIndex { index: usize, n: usize },
}
