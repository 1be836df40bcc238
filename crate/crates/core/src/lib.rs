//! Mid-circuit post-selection for constrained quantum optimization.
//!
//! * [`circuit`]: gate-level IR, JSON interchange, lowering to {1-qubit, CNOT}
//!   and resource accounting.
//! * [`sim`]: exact density-matrix simulation with per-gate noise and
//!   post-selection branches, plus a statevector path for noiseless checks.
//! * [`builders`]: validity filters and encoding conversions for k-hot,
//!   one-hot, domain-wall, binary/Gray and mixed encodings.
//! * [`qubo`]: QUBO/Ising models and the travelling-salesman formulation.
//! * [`qaoa`]: XY-mixer QAOA assembly, evaluation and optimization.
//! * [`experiments`]: seeded campaigns that compare final-only and
//!   mid-circuit post-selection.

pub mod builders;
pub mod circuit;
pub mod experiments;
pub mod linalg;
pub mod qaoa;
pub mod qubo;
pub mod sim;

pub use builders::{BuildError, EncodingSpec};
pub use circuit::{
    compose, inverse, resources, transpile, Circuit, CircuitError, Control, Gate, Instruction, McxStrategy,
    ResourceProfile,
};
pub use num_complex::Complex64 as C64;
pub use qubo::{IsingModel, QuboModel, TspInstance};
pub use sim::{DensityState, NoiseFamily, NoiseModel, SimError, SubspaceSpec};
