//! Gate-level circuit IR: gates, instructions, composition and inversion.
//!
//! Wire ordering is little-endian everywhere: wire `w` is bit `w` of a basis
//! index.

mod json;
mod resources;
mod transpile;

pub use json::{CircuitDoc, InstructionDoc};
pub use resources::{resources, ResourceProfile};
pub use transpile::{fuse_1q, lower, transpile, McxStrategy};

use crate::linalg::Mat2;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("wire {wire} out of range for a {n_qubits}-qubit circuit")]
    WireOutOfRange { wire: usize, n_qubits: usize },
    #[error("wire {0} used twice by one instruction")]
    DuplicateWire(usize),
    #[error("qubit count mismatch: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("instruction `{0}` has no unitary inverse")]
    NonUnitary(&'static str),
    #[error("matrix is not unitary (error {0:e})")]
    NotUnitary(f64),
    #[error("invalid circuit document: {0}")]
    Format(String),
    #[error("wire map has {got} entries, expected {expected}")]
    BadWireMap { got: usize, expected: usize },
}

/// One control of a multi-controlled gate. `closed` controls fire on |1⟩,
/// open controls on |0⟩.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Control {
    pub wire: usize,
    pub closed: bool,
}

impl Control {
    pub fn on(wire: usize) -> Self {
        Self { wire, closed: true }
    }

    pub fn off(wire: usize) -> Self {
        Self { wire, closed: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    /// Arbitrary single-qubit unitary.
    U1q { wire: usize, matrix: Mat2 },
    Cnot { control: usize, target: usize },
    Swap { a: usize, b: usize },
    /// Multi-controlled X with per-control polarity.
    Mcx { controls: Vec<Control>, target: usize },
    /// diag(1, e^{iφ}) on `target` when every control is satisfied.
    McPhase { controls: Vec<Control>, target: usize, angle: f64 },
    /// exp(−i·angle·(XX + YY)) on the pair.
    XxPlusYy { a: usize, b: usize, angle: f64 },
    Barrier { wires: Vec<usize> },
}

impl Gate {
    pub fn u1q(wire: usize, matrix: Mat2) -> Self {
        Gate::U1q { wire, matrix }
    }

    pub fn h(wire: usize) -> Self {
        Self::u1q(wire, Mat2::h())
    }

    pub fn x(wire: usize) -> Self {
        Self::u1q(wire, Mat2::x())
    }

    pub fn rz(wire: usize, theta: f64) -> Self {
        Self::u1q(wire, Mat2::rz(theta))
    }

    pub fn phase(wire: usize, phi: f64) -> Self {
        Self::u1q(wire, Mat2::phase(phi))
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    pub fn toffoli(a: usize, b: usize, target: usize) -> Self {
        Gate::Mcx { controls: vec![Control::on(a), Control::on(b)], target }
    }

    pub fn wires(&self) -> Vec<usize> {
        match self {
            Gate::U1q { wire, .. } => vec![*wire],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Swap { a, b } | Gate::XxPlusYy { a, b, .. } => vec![*a, *b],
            Gate::Mcx { controls, target } | Gate::McPhase { controls, target, .. } => {
                controls.iter().map(|c| c.wire).chain(std::iter::once(*target)).collect()
            }
            Gate::Barrier { wires } => wires.clone(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::U1q { .. } => "u1q",
            Gate::Cnot { .. } => "cnot",
            Gate::Swap { .. } => "swap",
            Gate::Mcx { .. } => "mcx",
            Gate::McPhase { .. } => "mcphase",
            Gate::XxPlusYy { .. } => "xx_plus_yy",
            Gate::Barrier { .. } => "barrier",
        }
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::U1q { wire, matrix } => Gate::U1q { wire: *wire, matrix: matrix.adjoint() },
            Gate::McPhase { controls, target, angle } => Gate::McPhase {
                controls: controls.clone(),
                target: *target,
                angle: -angle,
            },
            Gate::XxPlusYy { a, b, angle } => Gate::XxPlusYy { a: *a, b: *b, angle: -angle },
            g => g.clone(),
        }
    }

    fn remap(&self, map: &[usize]) -> Gate {
        let c = |cs: &[Control]| -> Vec<Control> {
            cs.iter().map(|c| Control { wire: map[c.wire], closed: c.closed }).collect()
        };
        match self {
            Gate::U1q { wire, matrix } => Gate::U1q { wire: map[*wire], matrix: *matrix },
            Gate::Cnot { control, target } => Gate::cnot(map[*control], map[*target]),
            Gate::Swap { a, b } => Gate::Swap { a: map[*a], b: map[*b] },
            Gate::Mcx { controls, target } => Gate::Mcx { controls: c(controls), target: map[*target] },
            Gate::McPhase { controls, target, angle } => Gate::McPhase {
                controls: c(controls),
                target: map[*target],
                angle: *angle,
            },
            Gate::XxPlusYy { a, b, angle } => Gate::XxPlusYy { a: map[*a], b: map[*b], angle: *angle },
            Gate::Barrier { wires } => Gate::Barrier { wires: wires.iter().map(|w| map[*w]).collect() },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instruction {
    Gate(Gate),
    /// Non-selective computational-basis measurement.
    MeasureZ(usize),
    /// X-basis measurement, simulated as H followed by `MeasureZ`.
    MeasureX(usize),
    /// Measure the wires and keep only the all-zero branch.
    PostSelectZero(Vec<usize>),
    /// Measure, discard and re-prepare |0⟩.
    Reset(usize),
}

impl Instruction {
    pub fn wires(&self) -> Vec<usize> {
        match self {
            Instruction::Gate(g) => g.wires(),
            Instruction::MeasureZ(w) | Instruction::MeasureX(w) | Instruction::Reset(w) => vec![*w],
            Instruction::PostSelectZero(ws) => ws.clone(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Instruction::Gate(g) => g.name(),
            Instruction::MeasureZ(_) => "measure_z",
            Instruction::MeasureX(_) => "measure_x",
            Instruction::PostSelectZero(_) => "postselect_zero",
            Instruction::Reset(_) => "reset",
        }
    }

    pub fn is_unitary(&self) -> bool {
        matches!(self, Instruction::Gate(_))
    }

    fn remap(&self, map: &[usize]) -> Instruction {
        match self {
            Instruction::Gate(g) => Instruction::Gate(g.remap(map)),
            Instruction::MeasureZ(w) => Instruction::MeasureZ(map[*w]),
            Instruction::MeasureX(w) => Instruction::MeasureX(map[*w]),
            Instruction::PostSelectZero(ws) => Instruction::PostSelectZero(ws.iter().map(|w| map[*w]).collect()),
            Instruction::Reset(w) => Instruction::Reset(map[*w]),
        }
    }
}

impl From<Gate> for Instruction {
    fn from(g: Gate) -> Self {
        Instruction::Gate(g)
    }
}

/// An ordered instruction list over `n_qubits` wires; `ancilla` marks the
/// wires that are not data.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    instructions: Vec<Instruction>,
    ancilla: BTreeSet<usize>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, instructions: Vec::new(), ancilla: BTreeSet::new() }
    }

    /// A circuit over `data` data wires followed by `ancilla` ancilla wires.
    pub fn with_ancilla(data: usize, ancilla: usize) -> Self {
        Self {
            n_qubits: data + ancilla,
            instructions: Vec::new(),
            ancilla: (data..data + ancilla).collect(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn ancilla(&self) -> &BTreeSet<usize> {
        &self.ancilla
    }

    pub fn data_wires(&self) -> Vec<usize> {
        (0..self.n_qubits).filter(|w| !self.ancilla.contains(w)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn mark_ancilla(&mut self, wire: usize) -> Result<(), CircuitError> {
        self.check_wire(wire)?;
        self.ancilla.insert(wire);
        Ok(())
    }

    pub fn unmark_ancilla(&mut self, wire: usize) {
        self.ancilla.remove(&wire);
    }

    /// Adds `extra` fresh ancilla wires and returns their indices.
    pub fn add_ancilla(&mut self, extra: usize) -> Vec<usize> {
        let start = self.n_qubits;
        self.n_qubits += extra;
        let ws: Vec<usize> = (start..start + extra).collect();
        self.ancilla.extend(ws.iter().copied());
        ws
    }

    fn check_wire(&self, wire: usize) -> Result<(), CircuitError> {
        if wire >= self.n_qubits {
            return Err(CircuitError::WireOutOfRange { wire, n_qubits: self.n_qubits });
        }
        Ok(())
    }

    pub fn push(&mut self, ins: impl Into<Instruction>) -> Result<(), CircuitError> {
        let ins = ins.into();
        let wires = ins.wires();
        let mut seen = BTreeSet::new();
        for &w in &wires {
            self.check_wire(w)?;
            if !seen.insert(w) {
                return Err(CircuitError::DuplicateWire(w));
            }
        }
        if let Instruction::Gate(Gate::U1q { matrix, .. }) = &ins {
            let err = matrix.unitarity_error();
            if err > 1e-12 {
                return Err(CircuitError::NotUnitary(err));
            }
        }
        self.instructions.push(ins);
        Ok(())
    }

    pub fn gate(&mut self, g: Gate) -> Result<(), CircuitError> {
        self.push(Instruction::Gate(g))
    }

    /// Appends `other` with its wire `i` placed on `map[i]` of `self`.
    /// Ancilla marks of `other` carry over.
    pub fn append_mapped(&mut self, other: &Circuit, map: &[usize]) -> Result<(), CircuitError> {
        if map.len() != other.n_qubits {
            return Err(CircuitError::BadWireMap { got: map.len(), expected: other.n_qubits });
        }
        for &w in map {
            self.check_wire(w)?;
        }
        for ins in &other.instructions {
            self.push(ins.remap(map))?;
        }
        for &a in &other.ancilla {
            self.ancilla.insert(map[a]);
        }
        Ok(())
    }

    /// Appends `other` on the identity wire map; `other` may be narrower.
    pub fn append(&mut self, other: &Circuit) -> Result<(), CircuitError> {
        let map: Vec<usize> = (0..other.n_qubits).collect();
        self.append_mapped(other, &map)
    }
}

/// Instructions of `a` followed by those of `b`, ancilla sets unioned.
pub fn compose(a: &Circuit, b: &Circuit) -> Result<Circuit, CircuitError> {
    if a.n_qubits != b.n_qubits {
        return Err(CircuitError::WidthMismatch(a.n_qubits, b.n_qubits));
    }
    let mut out = a.clone();
    out.instructions.extend(b.instructions.iter().cloned());
    out.ancilla.extend(b.ancilla.iter().copied());
    Ok(out)
}

/// Reversed instruction order with every gate inverted.
pub fn inverse(c: &Circuit) -> Result<Circuit, CircuitError> {
    let mut out = Circuit { n_qubits: c.n_qubits, instructions: Vec::new(), ancilla: c.ancilla.clone() };
    for ins in c.instructions.iter().rev() {
        match ins {
            Instruction::Gate(g) => out.instructions.push(Instruction::Gate(g.inverse())),
            other => return Err(CircuitError::NonUnitary(other.name())),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_validates_wires() {
        let mut c = Circuit::new(2);
        assert_eq!(c.gate(Gate::cnot(0, 2)), Err(CircuitError::WireOutOfRange { wire: 2, n_qubits: 2 }));
        assert_eq!(c.gate(Gate::cnot(1, 1)), Err(CircuitError::DuplicateWire(1)));
        let bad = Mat2::new(crate::linalg::ONE, crate::linalg::ONE, crate::linalg::ZERO, crate::linalg::ONE);
        assert!(matches!(c.gate(Gate::u1q(0, bad)), Err(CircuitError::NotUnitary(_))));
        assert!(c.gate(Gate::cnot(0, 1)).is_ok());
    }

    #[test]
    fn compose_with_empty_is_identity() {
        let mut c = Circuit::with_ancilla(2, 1);
        c.gate(Gate::h(0)).unwrap();
        c.gate(Gate::toffoli(0, 1, 2)).unwrap();
        let e = Circuit::new(3);
        assert_eq!(compose(&e, &c).unwrap(), c);
        assert_eq!(compose(&Circuit::new(2), &c), Err(CircuitError::WidthMismatch(2, 3)));
    }

    #[test]
    fn inverse_of_self_inverse_and_phase_gates() {
        let mut c = Circuit::new(3);
        c.gate(Gate::cnot(0, 1)).unwrap();
        c.gate(Gate::McPhase { controls: vec![Control::on(0)], target: 2, angle: 0.7 }).unwrap();
        let inv = inverse(&c).unwrap();
        assert_eq!(inv.instructions()[1], Instruction::Gate(Gate::cnot(0, 1)));
        assert_eq!(
            inv.instructions()[0],
            Instruction::Gate(Gate::McPhase { controls: vec![Control::on(0)], target: 2, angle: -0.7 })
        );
        c.push(Instruction::Reset(0)).unwrap();
        assert_eq!(inverse(&c), Err(CircuitError::NonUnitary("reset")));
    }

    #[test]
    fn append_mapped_moves_ancilla() {
        let mut inner = Circuit::with_ancilla(1, 1);
        inner.gate(Gate::cnot(0, 1)).unwrap();
        let mut outer = Circuit::new(4);
        outer.append_mapped(&inner, &[3, 1]).unwrap();
        assert_eq!(outer.instructions()[0], Instruction::Gate(Gate::cnot(3, 1)));
        assert!(outer.ancilla().contains(&1));
        assert!(outer.append_mapped(&inner, &[0]).is_err());
    }
}
