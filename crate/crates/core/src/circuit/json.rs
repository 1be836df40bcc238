//! JSON interchange form of a [`Circuit`].
//!
//! ```json
//! {"n_qubits": 3, "ancilla": [2],
//!  "instructions": [{"op": "mcx", "wires": [0, 1, 2], "polarity": [false, true]}]}
//! ```
//!
//! Controlled gates list their controls first and the target last. Matrices are
//! four row-major `[re, im]` pairs.

use super::{Circuit, CircuitError, Control, Gate, Instruction};
use crate::linalg::Mat2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct InstructionDoc {
    pub op: String,
    pub wires: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CircuitDoc {
    pub n_qubits: usize,
    pub ancilla: Vec<usize>,
    pub instructions: Vec<InstructionDoc>,
}

fn doc(op: &str, wires: Vec<usize>) -> InstructionDoc {
    InstructionDoc { op: op.to_string(), wires, polarity: None, angle: None, matrix: None }
}

impl From<&Instruction> for InstructionDoc {
    fn from(ins: &Instruction) -> Self {
        let mut d = doc(ins.name(), ins.wires());
        match ins {
            Instruction::Gate(Gate::U1q { matrix, .. }) => {
                d.matrix = Some(matrix.0.iter().flatten().map(|z| [z.re, z.im]).collect());
            }
            Instruction::Gate(Gate::Mcx { controls, .. }) => {
                d.polarity = Some(controls.iter().map(|c| c.closed).collect());
            }
            Instruction::Gate(Gate::McPhase { controls, angle, .. }) => {
                d.polarity = Some(controls.iter().map(|c| c.closed).collect());
                d.angle = Some(*angle);
            }
            Instruction::Gate(Gate::XxPlusYy { angle, .. }) => d.angle = Some(*angle),
            _ => {}
        }
        d
    }
}

impl TryFrom<&InstructionDoc> for Instruction {
    type Error = CircuitError;

    fn try_from(d: &InstructionDoc) -> Result<Self, CircuitError> {
        let bad = |msg: &str| CircuitError::Format(format!("{}: {msg}", d.op));
        let w = &d.wires;
        let arity = |n: usize| if w.len() == n { Ok(()) } else { Err(bad(&format!("expected {n} wires"))) };
        let angle = || d.angle.ok_or_else(|| bad("missing angle"));
        let controls = || -> Result<(Vec<Control>, usize), CircuitError> {
            let (target, cw) = w.split_last().ok_or_else(|| bad("needs a target wire"))?;
            let pol = d.polarity.clone().unwrap_or_else(|| vec![true; cw.len()]);
            if pol.len() != cw.len() {
                return Err(bad("polarity length must equal control count"));
            }
            Ok((cw.iter().zip(pol).map(|(&wire, closed)| Control { wire, closed }).collect(), *target))
        };
        Ok(match d.op.as_str() {
            "u1q" => {
                arity(1)?;
                let m = d.matrix.as_ref().ok_or_else(|| bad("missing matrix"))?;
                if m.len() != 4 {
                    return Err(bad("matrix needs 4 entries"));
                }
                let z: Vec<C64> = m.iter().map(|[re, im]| C64::new(*re, *im)).collect();
                Gate::U1q { wire: w[0], matrix: Mat2::new(z[0], z[1], z[2], z[3]) }.into()
            }
            "cnot" => {
                arity(2)?;
                Gate::cnot(w[0], w[1]).into()
            }
            "swap" => {
                arity(2)?;
                Gate::Swap { a: w[0], b: w[1] }.into()
            }
            "mcx" => {
                let (controls, target) = controls()?;
                Gate::Mcx { controls, target }.into()
            }
            "mcphase" => {
                let (controls, target) = controls()?;
                Gate::McPhase { controls, target, angle: angle()? }.into()
            }
            "xx_plus_yy" => {
                arity(2)?;
                Gate::XxPlusYy { a: w[0], b: w[1], angle: angle()? }.into()
            }
            "barrier" => Gate::Barrier { wires: w.clone() }.into(),
            "measure_z" => {
                arity(1)?;
                Instruction::MeasureZ(w[0])
            }
            "measure_x" => {
                arity(1)?;
                Instruction::MeasureX(w[0])
            }
            "postselect_zero" => Instruction::PostSelectZero(w.clone()),
            "reset" => {
                arity(1)?;
                Instruction::Reset(w[0])
            }
            other => return Err(CircuitError::Format(format!("unknown op `{other}`"))),
        })
    }
}

impl Circuit {
    pub fn to_doc(&self) -> CircuitDoc {
        CircuitDoc {
            n_qubits: self.n_qubits,
            ancilla: self.ancilla.iter().copied().collect(),
            instructions: self.instructions.iter().map(InstructionDoc::from).collect(),
        }
    }

    pub fn from_doc(doc: &CircuitDoc) -> Result<Circuit, CircuitError> {
        let mut c = Circuit::new(doc.n_qubits);
        for &a in &doc.ancilla {
            c.mark_ancilla(a)?;
        }
        for d in &doc.instructions {
            c.push(Instruction::try_from(d)?)?;
        }
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("circuit documents always serialize")
    }

    pub fn from_json(s: &str) -> Result<Circuit, CircuitError> {
        let doc: CircuitDoc = serde_json::from_str(s).map_err(|e| CircuitError::Format(e.to_string()))?;
        Circuit::from_doc(&doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_all_kinds() {
        let mut c = Circuit::with_ancilla(3, 1);
        c.gate(Gate::h(0)).unwrap();
        c.gate(Gate::cnot(0, 1)).unwrap();
        c.gate(Gate::Swap { a: 1, b: 2 }).unwrap();
        c.gate(Gate::Mcx { controls: vec![Control::off(0), Control::on(1)], target: 3 }).unwrap();
        c.gate(Gate::McPhase { controls: vec![Control::on(2)], target: 3, angle: 0.25 }).unwrap();
        c.gate(Gate::XxPlusYy { a: 0, b: 2, angle: -1.5 }).unwrap();
        c.gate(Gate::Barrier { wires: vec![0, 1, 2, 3] }).unwrap();
        c.push(Instruction::MeasureX(3)).unwrap();
        c.push(Instruction::MeasureZ(2)).unwrap();
        c.push(Instruction::PostSelectZero(vec![3])).unwrap();
        c.push(Instruction::Reset(3)).unwrap();
        let back = Circuit::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_malformed() {
        let j = r#"{"n_qubits":2,"ancilla":[],"instructions":[{"op":"mcx","wires":[0,1],"polarity":[true,false]}]}"#;
        assert!(matches!(Circuit::from_json(j), Err(CircuitError::Format(_))));
        let j = r#"{"n_qubits":2,"ancilla":[],"instructions":[{"op":"teleport","wires":[0]}]}"#;
        assert!(matches!(Circuit::from_json(j), Err(CircuitError::Format(_))));
        let j = r#"{"n_qubits":2,"ancilla":[],"instructions":[{"op":"cnot","wires":[0,5]}]}"#;
        assert!(matches!(Circuit::from_json(j), Err(CircuitError::WireOutOfRange { .. })));
    }
}
