use super::{Circuit, Gate, Instruction};
use serde::{Deserialize, Serialize};

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceProfile {
    pub ancilla: usize,
    pub gates: usize,
    pub depth: usize,
    pub volume: usize,
}

/// Ancilla, gate count, earliest-slot depth and volume of a circuit.
///
/// Gates are every unitary instruction except barriers. Measurements,
/// post-selections and resets do not count as gates but occupy one slot on
/// each of their wires. A barrier aligns its wires without taking a slot.
pub fn resources(c: &Circuit) -> ResourceProfile {
    let mut level = vec![0usize; c.n_qubits()];
    let mut gates = 0;
    for ins in c.instructions() {
        let wires = ins.wires();
        let start = wires.iter().map(|&w| level[w]).max().unwrap_or(0);
        let slot = match ins {
            Instruction::Gate(Gate::Barrier { .. }) => start,
            Instruction::Gate(_) => {
                gates += 1;
                start + 1
            }
            _ => start + 1,
        };
        for w in wires {
            level[w] = slot;
        }
    }
    let depth = level.into_iter().max().unwrap_or(0);
    ResourceProfile { ancilla: c.ancilla().len(), gates, depth, volume: depth * c.n_qubits() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_cnot() {
        let mut c = Circuit::new(2);
        c.gate(Gate::cnot(0, 1)).unwrap();
        assert_eq!(resources(&c), ResourceProfile { ancilla: 0, gates: 1, depth: 1, volume: 2 });
    }

    #[test]
    fn parallel_gates_share_a_slot() {
        let mut c = Circuit::with_ancilla(4, 1);
        c.gate(Gate::cnot(0, 1)).unwrap();
        c.gate(Gate::cnot(2, 3)).unwrap();
        c.gate(Gate::h(4)).unwrap();
        c.push(Instruction::PostSelectZero(vec![4])).unwrap();
        let r = resources(&c);
        assert_eq!(r.gates, 3);
        assert_eq!(r.depth, 2);
        assert_eq!(r.volume, 10);
        assert_eq!(r.ancilla, 1);
    }

    proptest! {
        #[test]
        fn depth_bounded_by_chain_and_count(ops in prop::collection::vec((0usize..5, 0usize..5), 0..60)) {
            let mut c = Circuit::new(5);
            let mut per_wire = [0usize; 5];
            for (a, b) in ops {
                if a == b {
                    c.gate(Gate::h(a)).unwrap();
                    per_wire[a] += 1;
                } else {
                    c.gate(Gate::cnot(a, b)).unwrap();
                    per_wire[a] += 1;
                    per_wire[b] += 1;
                }
            }
            let r = resources(&c);
            prop_assert!(r.depth >= *per_wire.iter().max().unwrap());
            prop_assert!(r.depth <= c.len());
            prop_assert_eq!(r.volume, r.depth * 5);
        }
    }
}
