use super::{binary_bound_filter, invalid, BoundCheck, BuildError};
use crate::circuit::{inverse, Circuit, Gate, Instruction};
use crate::linalg::{ceil_log2, is_power_of_two};

fn check_n(n: usize) -> Result<(), BuildError> {
    if n < 2 {
        return Err(invalid(format!("n = {n} must be at least 2")));
    }
    Ok(())
}

/// Wire holding bit k of the compressed value: wire 2^k.
pub fn onehot_output_wires(n: usize) -> Vec<usize> {
    (0..ceil_log2(n)).map(|k| 1usize << k).collect()
}

/// Wires that the compression leaves in |0⟩ for every one-hot input.
pub fn onehot_zero_wires(n: usize) -> Vec<usize> {
    (0..n).filter(|w| !is_power_of_two(*w)).collect()
}

/// Unitary V mapping the one-hot state at position p to binary(p) on
/// [`onehot_output_wires`], with every other wire in |0⟩.
///
/// Stages run from the most significant bit down. At stage h the wire h
/// becomes the output bit, every position p = i + h moves to i, and wire 0
/// tracks whether the remaining position is nonzero (it starts inverted).
pub fn onehot_compress(n: usize) -> Result<Circuit, BuildError> {
    check_n(n)?;
    let mut c = Circuit::new(n);
    c.gate(Gate::x(0))?;
    for k in (0..ceil_log2(n)).rev() {
        let h = 1usize << k;
        c.gate(Gate::cnot(h, 0))?;
        for i in 1..h {
            let src = i + h;
            if src >= n {
                break;
            }
            c.gate(Gate::cnot(src, i))?;
            c.gate(Gate::cnot(src, h))?;
            c.gate(Gate::toffoli(i, h, src))?;
        }
    }
    Ok(c)
}

/// V, post-selection of the zeroed wires, then V†. When n is not a power of
/// two the compressed value is also bounded by n − 1, using wire 0 (already
/// verified zero) as the flag.
pub fn onehot_postselect(n: usize) -> Result<Circuit, BuildError> {
    onehot_postselect_with(n, true)
}

pub fn onehot_postselect_with(n: usize, range_check: bool) -> Result<Circuit, BuildError> {
    let v = onehot_compress(n)?;
    let mut c = v.clone();
    c.push(Instruction::PostSelectZero(onehot_zero_wires(n)))?;
    if range_check && !is_power_of_two(n) {
        // value register on wires 2^k, flag on wire 0
        let bits = ceil_log2(n);
        let check = binary_bound_filter(bits, (n - 1) as u64, BoundCheck::Full)?;
        let mut map = onehot_output_wires(n);
        map.push(0);
        c.append_mapped(&check, &map)?;
        c.unmark_ancilla(0);
    }
    c.append(&inverse(&v)?)?;
    Ok(c)
}

/// Wall with w ones (wires 0..w) to one-hot at position w − 1: CNOT(i → i−1)
/// for i = 1, …, n−1, each pair differencing before its control changes.
pub fn wall_to_onehot(n: usize) -> Result<Circuit, BuildError> {
    check_n(n)?;
    let mut c = Circuit::new(n);
    for i in 1..n {
        c.gate(Gate::cnot(i, i - 1))?;
    }
    Ok(c)
}

/// Gray to binary by suffix XOR: CNOT(i → i−1) for i = n−1 down to 1.
pub fn gray_to_binary(n: usize) -> Result<Circuit, BuildError> {
    check_n(n)?;
    let mut c = Circuit::new(n);
    for i in (1..n).rev() {
        c.gate(Gate::cnot(i, i - 1))?;
    }
    Ok(c)
}
