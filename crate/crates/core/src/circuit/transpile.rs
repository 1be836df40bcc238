//! Lowering to the {arbitrary 1-qubit, CNOT} basis.
//!
//! Multi-controlled gates follow one of two strategies:
//!
//! * [`McxStrategy::AncillaFree`] touches only the gate's own wires. An
//!   n-controlled X is an incrementer pair built from Fourier-basis adders:
//!   O(n²) gates, O(n) depth. Other multi-controlled unitaries use the
//!   controlled-square-root recursion on top of it.
//! * [`McxStrategy::BorrowedAncilla`] computes the AND of the controls into a
//!   balanced Toffoli tree on extra wires that start and end in |0⟩: O(n)
//!   ancilla, O(n) gates, O(log n) depth. The pool is shared by every gate.
//! * [`McxStrategy::DedicatedAncilla`] builds the same tree on fresh wires for
//!   every gate, so gates on disjoint controls never contend for ancillas.

use super::{Circuit, CircuitError, Control, Gate, Instruction};
use crate::linalg::{max_abs_diff, Mat2};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McxStrategy {
    #[default]
    AncillaFree,
    BorrowedAncilla,
    DedicatedAncilla,
}

/// Output contains only `U1q`, `Cnot`, `MeasureZ`, `PostSelectZero` and `Reset`,
/// with runs of single-qubit gates on a wire fused into one.
pub fn transpile(c: &Circuit, strategy: McxStrategy) -> Result<Circuit, CircuitError> {
    fuse_1q(&lower(c, strategy)?)
}

/// Lowering without fusion: every rotation of every decomposition is kept.
pub fn lower(c: &Circuit, strategy: McxStrategy) -> Result<Circuit, CircuitError> {
    let mut low = Lowering { out: Circuit::new(c.n_qubits()), strategy, pool: Vec::new() };
    for &a in c.ancilla() {
        low.out.mark_ancilla(a)?;
    }
    for ins in c.instructions() {
        match ins {
            Instruction::Gate(g) => low.gate(g)?,
            Instruction::MeasureX(w) => {
                low.u(*w, Mat2::h())?;
                low.out.push(Instruction::MeasureZ(*w))?;
            }
            other => low.out.push(other.clone())?,
        }
    }
    Ok(low.out)
}

/// Multiplies consecutive `U1q` gates on each wire into one and drops
/// products equal to the identity up to phase.
pub fn fuse_1q(c: &Circuit) -> Result<Circuit, CircuitError> {
    let mut out = Circuit::new(c.n_qubits());
    for &a in c.ancilla() {
        out.mark_ancilla(a)?;
    }
    let mut pending: Vec<Option<Mat2>> = vec![None; c.n_qubits()];
    let flush = |out: &mut Circuit, pending: &mut Vec<Option<Mat2>>, w: usize| -> Result<(), CircuitError> {
        if let Some(m) = pending[w].take() {
            let ph = m.0[0][0] / m.0[0][0].norm().max(1e-300);
            if !(m.is_diagonal(1e-12) && (m.0[1][1] - ph).norm() < 1e-12 && (m.0[0][0].norm() - 1.0).abs() < 1e-12) {
                out.gate(Gate::U1q { wire: w, matrix: m })?;
            }
        }
        Ok(())
    };
    for ins in c.instructions() {
        match ins {
            Instruction::Gate(Gate::U1q { wire, matrix }) => {
                let acc = pending[*wire].map_or(*matrix, |m| *matrix * m);
                pending[*wire] = Some(acc);
            }
            other => {
                for w in other.wires() {
                    flush(&mut out, &mut pending, w)?;
                }
                out.push(other.clone())?;
            }
        }
    }
    for w in 0..c.n_qubits() {
        flush(&mut out, &mut pending, w)?;
    }
    Ok(out)
}

struct Lowering {
    out: Circuit,
    strategy: McxStrategy,
    pool: Vec<usize>,
}

fn is_x(m: &Mat2) -> bool {
    max_abs_diff(m, &Mat2::x()) < 1e-12
}

impl Lowering {
    fn u(&mut self, wire: usize, m: Mat2) -> Result<(), CircuitError> {
        self.out.gate(Gate::U1q { wire, matrix: m })
    }

    fn cx(&mut self, c: usize, t: usize) -> Result<(), CircuitError> {
        self.out.gate(Gate::cnot(c, t))
    }

    fn gate(&mut self, g: &Gate) -> Result<(), CircuitError> {
        match g {
            Gate::U1q { wire, matrix } => self.u(*wire, *matrix),
            Gate::Cnot { control, target } => self.cx(*control, *target),
            Gate::Swap { a, b } => {
                self.cx(*a, *b)?;
                self.cx(*b, *a)?;
                self.cx(*a, *b)
            }
            Gate::XxPlusYy { a, b, angle } => {
                // exp(−ir(XX+YY)) = (Rx(π/2)⊗Rx(π/2)) · CX (Rx(2r)⊗Rz(2r)) CX · (Rx(−π/2)⊗Rx(−π/2))
                self.u(*a, Mat2::rx(-FRAC_PI_2))?;
                self.u(*b, Mat2::rx(-FRAC_PI_2))?;
                self.cx(*a, *b)?;
                self.u(*a, Mat2::rx(2.0 * angle))?;
                self.u(*b, Mat2::rz(2.0 * angle))?;
                self.cx(*a, *b)?;
                self.u(*a, Mat2::rx(FRAC_PI_2))?;
                self.u(*b, Mat2::rx(FRAC_PI_2))
            }
            Gate::Barrier { .. } => Ok(()),
            Gate::Mcx { controls, target } => {
                self.with_polarity(controls, |low, cs| low.controlled(cs, *target, Mat2::x()))
            }
            Gate::McPhase { controls, target, angle } => {
                self.with_polarity(controls, |low, cs| low.controlled(cs, *target, Mat2::phase(*angle)))
            }
        }
    }

    /// Conjugates open controls with X and hands the closed wire list to `f`.
    fn with_polarity(
        &mut self,
        controls: &[Control],
        f: impl FnOnce(&mut Self, &[usize]) -> Result<(), CircuitError>,
    ) -> Result<(), CircuitError> {
        let open: Vec<usize> = controls.iter().filter(|c| !c.closed).map(|c| c.wire).collect();
        for &w in &open {
            self.u(w, Mat2::x())?;
        }
        let wires: Vec<usize> = controls.iter().map(|c| c.wire).collect();
        f(self, &wires)?;
        for &w in &open {
            self.u(w, Mat2::x())?;
        }
        Ok(())
    }

    fn controlled(&mut self, controls: &[usize], target: usize, m: Mat2) -> Result<(), CircuitError> {
        match controls.len() {
            0 => return self.u(target, m),
            1 => return self.cu(controls[0], target, m),
            2 if is_x(&m) => return self.toffoli(controls[0], controls[1], target),
            _ => {}
        }
        match self.strategy {
            McxStrategy::AncillaFree => self.mcu(controls, target, m),
            McxStrategy::BorrowedAncilla | McxStrategy::DedicatedAncilla => self.and_tree(controls, target, m),
        }
    }

    /// Standard 6-CNOT Toffoli.
    fn toffoli(&mut self, a: usize, b: usize, t: usize) -> Result<(), CircuitError> {
        self.u(t, Mat2::h())?;
        self.cx(b, t)?;
        self.u(t, Mat2::tdg())?;
        self.cx(a, t)?;
        self.u(t, Mat2::t())?;
        self.cx(b, t)?;
        self.u(t, Mat2::tdg())?;
        self.cx(a, t)?;
        self.u(b, Mat2::t())?;
        self.u(t, Mat2::h() * Mat2::t())?;
        self.cx(a, b)?;
        self.u(a, Mat2::t())?;
        self.u(b, Mat2::tdg())?;
        self.cx(a, b)
    }

    /// Singly-controlled U: diagonal U uses the phase-kickback form, anything
    /// else the A·X·B·X·C form from its Z-Y-Z angles.
    fn cu(&mut self, c: usize, t: usize, m: Mat2) -> Result<(), CircuitError> {
        if is_x(&m) {
            return self.cx(c, t);
        }
        if m.is_diagonal(1e-14) {
            let u0 = m.0[0][0];
            let phi = (m.0[1][1] / u0).arg();
            self.u(c, Mat2::phase(u0.arg() + phi / 2.0))?;
            self.cx(c, t)?;
            self.u(t, Mat2::phase(-phi / 2.0))?;
            self.cx(c, t)?;
            return self.u(t, Mat2::phase(phi / 2.0));
        }
        let (alpha, beta, gamma, delta) = m.zyz();
        let a = Mat2::rz(beta) * Mat2::ry(gamma / 2.0);
        let b = Mat2::ry(-gamma / 2.0) * Mat2::rz(-(delta + beta) / 2.0);
        let cm = Mat2::rz((delta - beta) / 2.0);
        self.u(t, cm)?;
        self.cx(c, t)?;
        self.u(t, b)?;
        self.cx(c, t)?;
        self.u(t, a)?;
        if alpha.abs() > 1e-15 {
            self.u(c, Mat2::phase(alpha))?;
        }
        Ok(())
    }

    fn mcu(&mut self, controls: &[usize], t: usize, m: Mat2) -> Result<(), CircuitError> {
        match controls.len() {
            0 => self.u(t, m),
            1 => self.cu(controls[0], t, m),
            _ if is_x(&m) => self.mcx(controls, t),
            _ => self.sqrt_recursion(controls, t, m),
        }
    }

    /// C^k(U) = C(V)·C^{k−1}X·C(V†)·C^{k−1}X·C^{k−1}(V) with V² = U.
    fn sqrt_recursion(&mut self, controls: &[usize], t: usize, m: Mat2) -> Result<(), CircuitError> {
        let (&last, rest) = controls.split_last().expect("at least two controls");
        let v = m.sqrt_unitary();
        self.cu(last, t, v)?;
        self.mcx(rest, last)?;
        self.cu(last, t, v.adjoint())?;
        self.mcx(rest, last)?;
        self.mcu(rest, t, v)
    }

    fn mcx(&mut self, controls: &[usize], t: usize) -> Result<(), CircuitError> {
        match controls {
            [] => self.u(t, Mat2::x()),
            [c] => self.cx(*c, t),
            [a, b] => self.toffoli(*a, *b, t),
            // shallower than the adders at this size
            [_, _, _] => self.sqrt_recursion(controls, t, Mat2::x()),
            _ => {
                // flips t exactly when the carry of controls + 1 reaches it
                let mut reg = controls.to_vec();
                reg.push(t);
                self.add_constant(&reg, 1.0)?;
                self.add_constant(controls, -1.0)
            }
        }
    }

    /// Adds `k` modulo 2^len to the little-endian register: Fourier transform,
    /// one phase per wire, inverse transform.
    fn add_constant(&mut self, reg: &[usize], k: f64) -> Result<(), CircuitError> {
        self.qft(reg, false)?;
        for (j, &w) in reg.iter().enumerate() {
            self.u(w, Mat2::phase(k * TAU / 2f64.powi(j as i32 + 1)))?;
        }
        self.qft(reg, true)
    }

    /// Without the final swaps, so wire j ends holding phase 2πx/2^{j+1}.
    ///
    /// The controlled phases of a block share their target, so the target's
    /// half of every phase is applied once after the Hadamard.
    fn qft(&mut self, reg: &[usize], inverse: bool) -> Result<(), CircuitError> {
        enum Op {
            U(usize, Mat2),
            Cx(usize, usize),
        }
        let mut ops = Vec::new();
        for j in (0..reg.len()).rev() {
            let t = reg[j];
            let angles: Vec<(usize, f64)> = (0..j).rev().map(|k| (reg[k], PI / 2f64.powi((j - k) as i32))).collect();
            let total: f64 = angles.iter().map(|(_, a)| a / 2.0).sum();
            ops.push(Op::U(t, Mat2::phase(total) * Mat2::h()));
            for (c, a) in angles {
                ops.push(Op::U(c, Mat2::phase(a / 2.0)));
                ops.push(Op::Cx(c, t));
                ops.push(Op::U(t, Mat2::phase(-a / 2.0)));
                ops.push(Op::Cx(c, t));
            }
        }
        if inverse {
            ops.reverse();
        }
        for op in ops {
            match op {
                Op::U(w, m) => self.u(w, if inverse { m.adjoint() } else { m })?,
                Op::Cx(c, t) => self.cx(c, t)?,
            }
        }
        Ok(())
    }

    fn ancilla(&mut self, n: usize) -> Vec<usize> {
        if self.strategy == McxStrategy::DedicatedAncilla {
            return self.out.add_ancilla(n);
        }
        if self.pool.len() < n {
            let extra = self.out.add_ancilla(n - self.pool.len());
            self.pool.extend(extra);
        }
        self.pool[..n].to_vec()
    }

    /// Balanced AND tree on clean ancillas, then the controlled operation from
    /// the last one or two nodes, then uncompute.
    fn and_tree(&mut self, controls: &[usize], t: usize, m: Mat2) -> Result<(), CircuitError> {
        let final_nodes = if is_x(&m) { 2 } else { 1 };
        let needed = controls.len() - final_nodes;
        let anc = self.ancilla(needed);
        let mut next_anc = anc.into_iter();
        let mut nodes = controls.to_vec();
        let mut computed = Vec::new();
        while nodes.len() > final_nodes {
            let mut count = nodes.len();
            let mut level = Vec::with_capacity(count.div_ceil(2));
            for pair in nodes.chunks(2) {
                if pair.len() == 2 && count > final_nodes {
                    let a = next_anc.next().expect("ancilla count");
                    self.toffoli(pair[0], pair[1], a)?;
                    computed.push((pair[0], pair[1], a));
                    level.push(a);
                    count -= 1;
                } else {
                    level.extend_from_slice(pair);
                }
            }
            nodes = level;
        }
        if final_nodes == 2 {
            self.toffoli(nodes[0], nodes[1], t)?;
        } else {
            self.cu(nodes[0], t, m)?;
        }
        for &(x, y, z) in computed.iter().rev() {
            self.toffoli(x, y, z)?;
        }
        Ok(())
    }
}
