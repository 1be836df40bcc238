use midselect::linalg::{phase_insensitive_distance, Mat2};
use midselect::sim::{circuit_unitary, Statevector};
use midselect::circuit::{fuse_1q, lower};
use midselect::{resources, transpile, Circuit, Control, Gate, Instruction, McxStrategy, C64};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn lowered_only(c: &Circuit) -> bool {
    c.instructions()
        .iter()
        .all(|i| matches!(i, Instruction::Gate(Gate::U1q { .. } | Gate::Cnot { .. })))
}

/// Columns of a transpiled circuit whose added ancillas start in |0⟩,
/// restricted to rows where they end in |0⟩, plus the largest amplitude
/// leaking out of that block.
fn data_block(low: &Circuit, data: usize) -> (Vec<C64>, f64) {
    let dd = 1usize << data;
    let mut block = vec![C64::new(0.0, 0.0); dd * dd];
    let mut leak = 0.0f64;
    for col in 0..dd {
        let mut s = Statevector::basis(low.n_qubits(), col).unwrap();
        s.run(low).unwrap();
        for (row, a) in s.amplitudes().iter().enumerate() {
            if row < dd {
                block[row * dd + col] = *a;
            } else {
                leak = leak.max(a.norm());
            }
        }
    }
    (block, leak)
}

fn check(c: &Circuit, strategy: McxStrategy) {
    let low = transpile(c, strategy).unwrap();
    assert!(lowered_only(&low), "non-basis gate left after lowering");
    let want = circuit_unitary(c).unwrap();
    let (block, leak) = data_block(&low, c.n_qubits());
    assert!(leak < TOL, "ancilla not restored: {leak}");
    let dist = phase_insensitive_distance(&want, &block);
    assert!(dist < TOL, "{strategy:?}: distance {dist} for {:?}", c.instructions());
}

fn single(n: usize, g: Gate) -> Circuit {
    let mut c = Circuit::new(n);
    c.gate(g).unwrap();
    c
}

fn both(c: &Circuit) {
    check(c, McxStrategy::AncillaFree);
    check(c, McxStrategy::BorrowedAncilla);
    check(c, McxStrategy::DedicatedAncilla);
}

#[test]
fn two_and_three_qubit_primitives() {
    both(&single(2, Gate::Swap { a: 1, b: 0 }));
    both(&single(3, Gate::toffoli(2, 0, 1)));
    for angle in [0.0, 0.3, -1.1, 2.9] {
        both(&single(2, Gate::XxPlusYy { a: 0, b: 1, angle }));
        both(&single(3, Gate::XxPlusYy { a: 2, b: 0, angle }));
    }
}

#[test]
fn open_controls() {
    both(&single(3, Gate::Mcx { controls: vec![Control::off(0), Control::on(2)], target: 1 }));
    both(&single(2, Gate::Mcx { controls: vec![Control::off(1)], target: 0 }));
    both(&single(4, Gate::McPhase { controls: vec![Control::off(3), Control::off(0), Control::on(1)], target: 2, angle: 0.7 }));
}

#[test]
fn multi_controlled_x_up_to_six_controls() {
    for k in 0..=6 {
        let controls: Vec<Control> = (0..k).map(|w| if w % 3 == 1 { Control::off(w) } else { Control::on(w) }).collect();
        // no idle wires, one idle wire, and enough for the V-chain
        for extra in [0, 1, k.saturating_sub(2)] {
            let n = k + 1 + extra;
            if n > 11 {
                continue;
            }
            both(&single(n, Gate::Mcx { controls: controls.clone(), target: k }));
        }
    }
}

#[test]
fn multi_controlled_phase_up_to_six_controls() {
    for k in 0..=6 {
        for angle in [std::f64::consts::PI, 0.4, -2.2] {
            let controls: Vec<Control> = (1..=k).map(Control::on).collect();
            both(&single(k + 1, Gate::McPhase { controls: controls.clone(), target: 0, angle }));
            both(&single(k + 2, Gate::McPhase { controls, target: 0, angle }));
        }
    }
}

#[test]
fn general_single_qubit_controlled_through_recursion() {
    // a controlled non-diagonal unitary only appears through the square-root
    // recursion; check a circuit where the target is a Y-rotation conjugate
    let mut c = Circuit::new(4);
    c.gate(Gate::u1q(0, Mat2::ry(0.8))).unwrap();
    c.gate(Gate::McPhase { controls: vec![Control::on(1), Control::on(2), Control::off(3)], target: 0, angle: 1.3 }).unwrap();
    c.gate(Gate::u1q(0, Mat2::ry(-0.8))).unwrap();
    both(&c);
}

#[test]
fn non_unitary_instructions_pass_through() {
    let mut c = Circuit::with_ancilla(3, 1);
    c.gate(Gate::toffoli(0, 1, 3)).unwrap();
    c.push(Instruction::PostSelectZero(vec![3])).unwrap();
    c.push(Instruction::Reset(3)).unwrap();
    c.push(Instruction::MeasureX(2)).unwrap();
    let low = transpile(&c, McxStrategy::AncillaFree).unwrap();
    let kinds: Vec<&str> = low.instructions().iter().map(|i| i.name()).collect();
    assert!(kinds.contains(&"postselect_zero"));
    assert!(kinds.contains(&"reset"));
    assert!(matches!(low.instructions().last(), Some(Instruction::MeasureZ(2))));
    assert_eq!(low.ancilla(), c.ancilla());
}

#[test]
fn borrowed_ancilla_reuses_its_pool() {
    let mut c = Circuit::new(7);
    let controls: Vec<Control> = (0..6).map(Control::on).collect();
    c.gate(Gate::Mcx { controls: controls.clone(), target: 6 }).unwrap();
    c.gate(Gate::Mcx { controls, target: 6 }).unwrap();
    let low = transpile(&c, McxStrategy::BorrowedAncilla).unwrap();
    assert_eq!(low.n_qubits(), 7 + 4);
    assert_eq!(resources(&low).ancilla, 4);
    let dedicated = transpile(&c, McxStrategy::DedicatedAncilla).unwrap();
    assert_eq!(resources(&dedicated).ancilla, 8);
}

#[test]
fn ancilla_free_adds_no_wires() {
    let controls: Vec<Control> = (0..9).map(Control::on).collect();
    let c = single(10, Gate::Mcx { controls, target: 9 });
    let low = transpile(&c, McxStrategy::AncillaFree).unwrap();
    assert_eq!(low.n_qubits(), 10);
    assert!(low.ancilla().is_empty());
}

#[test]
fn fusion_preserves_the_unitary_and_shrinks_the_circuit() {
    let mut c = Circuit::new(4);
    c.gate(Gate::Mcx { controls: vec![Control::on(0), Control::off(1), Control::on(2)], target: 3 }).unwrap();
    c.gate(Gate::XxPlusYy { a: 1, b: 2, angle: 0.4 }).unwrap();
    c.gate(Gate::h(0)).unwrap();
    c.gate(Gate::h(0)).unwrap();
    let low = lower(&c, McxStrategy::AncillaFree).unwrap();
    let fused = fuse_1q(&low).unwrap();
    assert!(fused.len() < low.len());
    let d = phase_insensitive_distance(&circuit_unitary(&low).unwrap(), &circuit_unitary(&fused).unwrap());
    assert!(d < TOL, "{d}");
    let mut ident = Circuit::new(1);
    ident.gate(Gate::u1q(0, Mat2::rz(0.7))).unwrap();
    ident.gate(Gate::u1q(0, Mat2::rz(-0.7))).unwrap();
    assert!(fuse_1q(&ident).unwrap().is_empty());
}

#[test]
fn ancilla_free_mcx_depth_is_linear() {
    let depth = |k: usize| {
        let c = single(k + 1, Gate::Mcx { controls: (0..k).map(Control::on).collect(), target: k });
        resources(&transpile(&c, McxStrategy::AncillaFree).unwrap()).depth as f64
    };
    let per_control: Vec<f64> = [8, 16, 32, 64].iter().map(|&k| depth(k) / k as f64).collect();
    let (lo, hi) = per_control.iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi / lo < 1.5, "{per_control:?}");
}

fn arb_gate(n: usize) -> impl Strategy<Value = Gate> {
    let wires = Just((0..n).collect::<Vec<_>>()).prop_shuffle();
    (wires, 0usize..6, -3.2f64..3.2, 0usize..4, any::<u8>()).prop_map(move |(w, kind, angle, k, pol)| {
        let controls = |k: usize| -> Vec<Control> {
            w[1..=k].iter().enumerate().map(|(i, &x)| Control { wire: x, closed: pol >> i & 1 == 0 }).collect()
        };
        match kind {
            0 => Gate::u1q(w[0], Mat2::ry(angle) * Mat2::rz(angle * 0.5)),
            1 => Gate::cnot(w[0], w[1]),
            2 => Gate::Swap { a: w[0], b: w[1] },
            3 => Gate::XxPlusYy { a: w[0], b: w[1], angle },
            4 => Gate::Mcx { controls: controls(k.min(n - 1)), target: w[0] },
            _ => Gate::McPhase { controls: controls(k.min(n - 1)), target: w[0], angle },
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn random_circuits_lower_exactly(gates in prop::collection::vec(arb_gate(5), 1..10)) {
        let mut c = Circuit::new(5);
        for g in gates {
            c.gate(g).unwrap();
        }
        // dedicated trees can add two wires per gate, too many to simulate here
        check(&c, McxStrategy::AncillaFree);
        check(&c, McxStrategy::BorrowedAncilla);
    }
}
