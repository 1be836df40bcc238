use super::{SimError, REJECT_THRESHOLD};
use crate::circuit::{Circuit, Control, Gate, Instruction};
use crate::linalg::{Mat2, ZERO};
use num_complex::Complex64 as C64;

/// Noiseless pure-state simulator over the full gate set.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n: usize,
    amps: Vec<C64>,
    acceptance: f64,
}

fn control_mask(controls: &[Control]) -> (usize, usize) {
    let mask = controls.iter().map(|c| 1usize << c.wire).sum();
    let want = controls.iter().filter(|c| c.closed).map(|c| 1usize << c.wire).sum();
    (mask, want)
}

impl Statevector {
    pub fn basis(n: usize, index: usize) -> Result<Self, SimError> {
        if index >= 1usize << n {
            return Err(SimError::BadIndex { index, n });
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { n, amps, acceptance: 1.0 })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> Result<Self, SimError> {
        if amps.len() != 1usize << n {
            return Err(SimError::LengthMismatch { expected: 1 << n, got: amps.len() });
        }
        Ok(Self { n, amps, acceptance: 1.0 })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn acceptance(&self) -> f64 {
        self.acceptance
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies `m` to `target` on the basis states where `(i & mask) == want`.
    fn controlled_1q(&mut self, mask: usize, want: usize, target: usize, m: &Mat2) {
        let bit = 1usize << target;
        let [[a, b], [c, d]] = m.0;
        for i0 in 0..self.amps.len() {
            if i0 & bit != 0 || i0 & mask != want {
                continue;
            }
            let i1 = i0 | bit;
            let (p, q) = (self.amps[i0], self.amps[i1]);
            self.amps[i0] = a * p + b * q;
            self.amps[i1] = c * p + d * q;
        }
    }

    pub fn apply_gate(&mut self, g: &Gate) -> Result<(), SimError> {
        if let Some(&w) = g.wires().iter().find(|&&w| w >= self.n) {
            return Err(SimError::WidthMismatch { state: self.n, needed: w + 1 });
        }
        match g {
            Gate::U1q { wire, matrix } => self.controlled_1q(0, 0, *wire, matrix),
            Gate::Cnot { control, target } => {
                let m = 1usize << control;
                self.controlled_1q(m, m, *target, &Mat2::x());
            }
            Gate::Swap { a, b } => {
                let (ba, bb) = (1usize << a, 1usize << b);
                for i in 0..self.amps.len() {
                    if i & ba != 0 && i & bb == 0 {
                        self.amps.swap(i, i ^ ba ^ bb);
                    }
                }
            }
            Gate::Mcx { controls, target } => {
                let (mask, want) = control_mask(controls);
                self.controlled_1q(mask, want, *target, &Mat2::x());
            }
            Gate::McPhase { controls, target, angle } => {
                let (mask, want) = control_mask(controls);
                self.controlled_1q(mask, want, *target, &Mat2::phase(*angle));
            }
            Gate::XxPlusYy { a, b, angle } => {
                // acts as a rotation by 2·angle inside span{|01⟩, |10⟩}
                let (ba, bb) = (1usize << a, 1usize << b);
                let (s, c) = (2.0 * angle).sin_cos();
                let mi = C64::new(0.0, -s);
                for i in 0..self.amps.len() {
                    if i & ba != 0 && i & bb == 0 {
                        let j = i ^ ba ^ bb;
                        let (p, q) = (self.amps[i], self.amps[j]);
                        self.amps[i] = p * c + q * mi;
                        self.amps[j] = p * mi + q * c;
                    }
                }
            }
            Gate::Barrier { .. } => {}
        }
        Ok(())
    }

    /// Projects the wires onto |0…0⟩ and renormalizes.
    pub fn postselect_zero(&mut self, wires: &[usize]) -> Result<f64, SimError> {
        let mask: usize = wires.iter().map(|w| 1usize << w).sum();
        let p: f64 = self.amps.iter().enumerate().filter(|(i, _)| i & mask == 0).map(|(_, a)| a.norm_sqr()).sum();
        if p < REJECT_THRESHOLD {
            return Err(SimError::Rejected(p));
        }
        let s = 1.0 / p.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a = if i & mask == 0 { *a * s } else { ZERO };
        }
        self.acceptance *= p;
        Ok(p)
    }

    /// Re-prepares |0⟩ on a wire that is already in a definite state.
    pub fn reset(&mut self, w: usize) -> Result<(), SimError> {
        let bit = 1usize << w;
        let one: f64 = self.amps.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum();
        let total = self.norm_sqr();
        if one < 1e-12 * total {
            return Ok(());
        }
        if one < total * (1.0 - 1e-12) {
            return Err(SimError::Unsupported("reset of an entangled or superposed wire"));
        }
        for i in 0..self.amps.len() {
            if i & bit != 0 {
                self.amps[i ^ bit] = self.amps[i];
                self.amps[i] = ZERO;
            }
        }
        Ok(())
    }

    pub fn apply_instruction(&mut self, ins: &Instruction) -> Result<(), SimError> {
        match ins {
            Instruction::Gate(g) => self.apply_gate(g),
            Instruction::PostSelectZero(ws) => self.postselect_zero(ws).map(|_| ()),
            Instruction::Reset(w) => self.reset(*w),
            Instruction::MeasureZ(_) | Instruction::MeasureX(_) => Err(SimError::Unsupported("non-selective measurement")),
        }
    }

    pub fn run(&mut self, c: &Circuit) -> Result<(), SimError> {
        if c.n_qubits() != self.n {
            return Err(SimError::WidthMismatch { state: self.n, needed: c.n_qubits() });
        }
        for ins in c.instructions() {
            self.apply_instruction(ins)?;
        }
        Ok(())
    }
}

/// Full 2^n×2^n matrix (row-major) of a measurement-free circuit.
pub fn circuit_unitary(c: &Circuit) -> Result<Vec<C64>, SimError> {
    let d = 1usize << c.n_qubits();
    let mut u = vec![ZERO; d * d];
    for col in 0..d {
        let mut s = Statevector::basis(c.n_qubits(), col)?;
        for ins in c.instructions() {
            match ins {
                Instruction::Gate(g) => s.apply_gate(g)?,
                other => return Err(SimError::Unsupported(other.name())),
            }
        }
        for (row, a) in s.amps.iter().enumerate() {
            u[row * d + col] = *a;
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swap_exchanges_bits() {
        let mut s = Statevector::basis(2, 1).unwrap();
        s.apply_gate(&Gate::Swap { a: 0, b: 1 }).unwrap();
        assert_eq!(s.amplitudes()[2], C64::new(1.0, 0.0));
    }

    #[test]
    fn open_control_fires_on_zero() {
        let mut s = Statevector::basis(2, 0).unwrap();
        s.apply_gate(&Gate::Mcx { controls: vec![Control::off(0)], target: 1 }).unwrap();
        assert_eq!(s.amplitudes()[2], C64::new(1.0, 0.0));
    }

    #[test]
    fn reset_needs_definite_wire() {
        let mut s = Statevector::basis(1, 0).unwrap();
        s.apply_gate(&Gate::h(0)).unwrap();
        assert!(s.reset(0).is_err());
        let mut s = Statevector::basis(2, 3).unwrap();
        s.reset(1).unwrap();
        assert_eq!(s.amplitudes()[1], C64::new(1.0, 0.0));
    }
}
