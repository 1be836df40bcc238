//! XY-mixer QAOA over one-hot registers with optional mid-circuit
//! post-selection through compression.

mod optimize;

pub use optimize::{lbfgsb, optimize, LbfgsbOptions, Mode, OptResult};

use crate::builders::{onehot_postselect, BuildError};
use crate::circuit::{transpile, Circuit, CircuitError, Gate, Instruction, McxStrategy};
use crate::linalg::Mat2;
use crate::qubo::{brute_spectrum, normalize_energy, reduced_tsp_qubo, separator_qubo, QuboError, QuboModel, TspInstance};
use crate::sim::{run, NoiseModel, SimError, SubspaceSpec};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QaoaError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Qubo(#[from] QuboError),
}

/// Ansatz shape and angles. `angles` holds p_1…p_l followed by r_1…r_l.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzConfig {
    pub n_registers: usize,
    pub register_width: usize,
    pub layers: usize,
    pub postselect_every: Option<usize>,
    pub angles: Vec<f64>,
    #[serde(default = "one")]
    pub mixer_steps: usize,
}

fn one() -> usize {
    1
}

impl AnsatzConfig {
    pub fn new(n_registers: usize, register_width: usize, layers: usize, angles: Vec<f64>) -> Self {
        Self { n_registers, register_width, layers, postselect_every: None, angles, mixer_steps: 1 }
    }

    pub fn with_postselect(mut self, every: Option<usize>) -> Self {
        self.postselect_every = every;
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.n_registers * self.register_width
    }

    pub fn validate(&self) -> Result<(), QaoaError> {
        let bad = |m: String| Err(QaoaError::Config(m));
        if self.n_registers == 0 || self.register_width < 2 {
            return bad(format!("need at least one register of width ≥ 2, got {}×{}", self.n_registers, self.register_width));
        }
        if self.angles.len() != 2 * self.layers {
            return bad(format!("{} layers need {} angles, got {}", self.layers, 2 * self.layers, self.angles.len()));
        }
        if self.postselect_every == Some(0) {
            return bad("postselect_every must be positive".into());
        }
        if self.mixer_steps == 0 {
            return bad("mixer_steps must be positive".into());
        }
        Ok(())
    }

    pub fn p(&self, layer: usize) -> f64 {
        self.angles[layer]
    }

    pub fn r(&self, layer: usize) -> f64 {
        self.angles[self.layers + layer]
    }

    /// Number of post-selection blocks the assembled circuit will contain.
    pub fn postselect_blocks(&self) -> usize {
        self.postselect_every.map_or(0, |k| self.layers / k)
    }
}

/// Equal superposition of the `width` weight-one states.
///
/// X on wire 0, then a cascade of XX+YY rotations moving amplitude from wire
/// i to wire i+1, each followed by a phase fix on wire i+1.
pub fn w_state_circuit(width: usize) -> Result<Circuit, QaoaError> {
    if width == 0 {
        return Err(QaoaError::Config("width must be positive".into()));
    }
    let mut c = Circuit::new(width);
    c.gate(Gate::x(0))?;
    for i in 0..width - 1 {
        let keep = (1.0 / (width - i) as f64).sqrt();
        c.gate(Gate::XxPlusYy { a: i, b: i + 1, angle: keep.acos() / 2.0 })?;
        c.gate(Gate::phase(i + 1, FRAC_PI_2))?;
    }
    Ok(c)
}

/// 0-based wire pairs of one mixer application: even 1-based i, then odd i,
/// then the periodic pair (n, 1) when it is distinct from (1, 2).
pub fn mixer_pairs(width: usize) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (2..width).step_by(2).map(|i| (i - 1, i)).collect();
    pairs.extend((1..width).step_by(2).map(|i| (i - 1, i)));
    if width > 2 {
        pairs.push((width - 1, 0));
    }
    pairs
}

/// One Trotter step of exp(−i·r·Σ(XX+YY)) on a ring.
pub fn xy_mixer_layer(width: usize, angle: f64) -> Result<Circuit, QaoaError> {
    if width < 2 {
        return Err(QaoaError::Config(format!("mixer width {width} < 2")));
    }
    let mut c = Circuit::new(width);
    for (a, b) in mixer_pairs(width) {
        c.gate(Gate::XxPlusYy { a, b, angle })?;
    }
    Ok(c)
}

/// exp(−i·p·H) for the Ising form of `qubo`, up to global phase: Rz(−2ph) per
/// field and CX·Rz(−2pJ)·CX per coupling.
pub fn phase_separator(qubo: &QuboModel, angle: f64) -> Result<Circuit, QaoaError> {
    let ising = qubo.to_ising();
    let n = qubo.num_vars();
    let mut c = Circuit::new(n);
    for (i, &h) in ising.h().iter().enumerate() {
        if h != 0.0 {
            c.gate(Gate::u1q(i, Mat2::rz(-2.0 * angle * h)))?;
        }
    }
    for (i, j, jv) in ising.couplings() {
        c.gate(Gate::cnot(i, j))?;
        c.gate(Gate::u1q(j, Mat2::rz(-2.0 * angle * jv)))?;
        c.gate(Gate::cnot(i, j))?;
    }
    Ok(c)
}

/// Alternating layers with Rz columns and a brick of √iSWAP pairs; every
/// gate preserves Hamming weight. `angles` has `layers·n` entries.
pub fn demo_hamming_ansatz(n: usize, layers: usize, angles: &[f64], entangle: bool) -> Result<Circuit, QaoaError> {
    if n < 2 {
        return Err(QaoaError::Config("n must be at least 2".into()));
    }
    if angles.len() != layers * n {
        return Err(QaoaError::Config(format!("expected {} angles, got {}", layers * n, angles.len())));
    }
    let mut c = Circuit::new(n);
    for layer in 0..layers {
        for w in 0..n {
            c.gate(Gate::u1q(w, Mat2::rz(angles[layer * n + w])))?;
        }
        if entangle {
            for a in (layer % 2..n - 1).step_by(2) {
                c.gate(Gate::XxPlusYy { a, b: a + 1, angle: -std::f64::consts::PI / 8.0 })?;
            }
        }
    }
    Ok(c)
}

/// W states, then l layers of separator and mixer, with per-register
/// compression post-selection after every `postselect_every`-th layer.
pub fn assemble(config: &AnsatzConfig, separator: &QuboModel) -> Result<Circuit, QaoaError> {
    config.validate()?;
    let n = config.n_qubits();
    if separator.num_vars() != n {
        return Err(QaoaError::Config(format!("model has {} variables, ansatz {n} qubits", separator.num_vars())));
    }
    let w = config.register_width;
    let regs: Vec<Vec<usize>> = (0..config.n_registers).map(|r| (r * w..(r + 1) * w).collect()).collect();
    let mut c = Circuit::new(n);
    let wprep = w_state_circuit(w)?;
    for reg in &regs {
        c.append_mapped(&wprep, reg)?;
    }
    let check = onehot_postselect(w)?;
    for layer in 0..config.layers {
        c.append(&phase_separator(separator, config.p(layer))?)?;
        let mixer = xy_mixer_layer(w, config.r(layer) / config.mixer_steps as f64)?;
        for reg in &regs {
            for _ in 0..config.mixer_steps {
                c.append_mapped(&mixer, reg)?;
            }
        }
        if config.postselect_every.is_some_and(|k| (layer + 1) % k == 0) {
            for reg in &regs {
                c.append_mapped(&check, reg)?;
            }
        }
    }
    Ok(c)
}

/// A reduced TSP instance prepared for evaluation: separator model, energy
/// diagonal and normalization bounds.
#[derive(Clone, Debug)]
pub struct TspProblem {
    pub instance: TspInstance,
    pub registers: usize,
    pub width: usize,
    pub model: QuboModel,
    pub separator: QuboModel,
    pub energies: Vec<f64>,
    pub e_min: f64,
    pub e_max: f64,
    pub feasible: SubspaceSpec,
}

impl TspProblem {
    pub fn new(instance: &TspInstance) -> Result<Self, QaoaError> {
        if instance.n < 3 {
            return Err(QaoaError::Config("the reduced ansatz needs at least 3 cities".into()));
        }
        let model = reduced_tsp_qubo(instance)?;
        let separator = separator_qubo(instance)?;
        let spec = brute_spectrum(&model)?;
        let k = instance.n - 1;
        Ok(Self {
            instance: instance.clone(),
            registers: k,
            width: k,
            feasible: SubspaceSpec::one_hot_registers(k * k, k, k)?,
            model,
            separator,
            energies: spec.energies,
            e_min: spec.min,
            e_max: spec.max,
        })
    }

    pub fn config(&self, layers: usize, angles: Vec<f64>) -> AnsatzConfig {
        AnsatzConfig::new(self.registers, self.width, layers, angles)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// Normalized to [0, 1] by the model's extreme energies.
    pub energy: f64,
    pub raw_energy: f64,
    /// Product of every post-selection probability, final filter included.
    pub acceptance: f64,
    /// Acceptance of the mid-circuit blocks alone.
    pub mid_acceptance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlaps: Option<(f64, f64, f64)>,
}

/// Transpiles and simulates the ansatz from |0…0⟩, optionally filters the
/// outcome onto the per-register one-hot set, and returns the energy of the
/// full reduced model.
pub fn evaluate(
    config: &AnsatzConfig,
    problem: &TspProblem,
    noise: &NoiseModel,
    final_postselect: bool,
) -> Result<EvalResult, QaoaError> {
    if config.n_registers != problem.registers || config.register_width != problem.width {
        return Err(QaoaError::Config("ansatz shape does not match the problem".into()));
    }
    let circuit = transpile(&assemble(config, &problem.separator)?, McxStrategy::AncillaFree)?;
    let mut state = run(&circuit, noise, 0)?;
    let mid_acceptance = state.acceptance();
    if final_postselect {
        state.classical_postselect(&problem.feasible)?;
    }
    let raw = state.expectation(&problem.energies)?;
    Ok(EvalResult {
        energy: normalize_energy(raw, problem.e_min, problem.e_max)?,
        raw_energy: raw,
        acceptance: state.acceptance(),
        mid_acceptance,
        overlaps: None,
    })
}

/// Counts post-selection instructions, for inspecting assembled circuits.
pub fn count_postselections(c: &Circuit) -> usize {
    c.instructions().iter().filter(|i| matches!(i, Instruction::PostSelectZero(_))).count()
}
