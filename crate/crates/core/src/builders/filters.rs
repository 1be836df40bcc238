use super::{count_blocks, gray_to_binary, invalid, onehot_postselect, BuildError};
use crate::circuit::{inverse, Circuit, Control, Gate, Instruction};
use crate::linalg::Mat2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KHotVariant {
    SingleAncilla,
    LogAncilla,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainWallVariant {
    Parallel,
    Inductive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixedVariant {
    CountSigma1,
    CountSiglog,
    StoreOnehot,
}

/// How many of the bound checks to emit, most significant first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundCheck {
    Full,
    Partial(usize),
}

/// R_j phase for block j (0-based).
fn block_angle(j: usize) -> f64 {
    PI / (1u64 << j) as f64
}

/// Correction applied before reading block j: removes the target's low bits
/// (through bit j) so that a match leaves the ancilla in |0⟩ after H.
fn block_correction(kappa: usize, j: usize) -> Mat2 {
    let low = kappa & ((1usize << (j + 1)) - 1);
    Mat2::phase(-(low as f64) * block_angle(j))
}

/// A counting term: a set of controls whose joint satisfaction adds one to
/// the count.
type Term = Vec<Control>;

/// Rz(θ) on `target` when every control is satisfied, as Rz(θ/2)·X·Rz(−θ/2)·X.
///
/// Compared with a controlled phase this also multiplies each data state by
/// e^{−iθ·count/2}; all accepted states share one count, so the factor is
/// global on the accepted subspace.
fn controlled_rz(c: &mut Circuit, controls: &[Control], target: usize, angle: f64) -> Result<(), BuildError> {
    let flip = || Gate::Mcx { controls: controls.to_vec(), target };
    c.gate(Gate::u1q(target, Mat2::rz(angle / 2.0)))?;
    c.gate(flip())?;
    c.gate(Gate::u1q(target, Mat2::rz(-angle / 2.0)))?;
    c.gate(flip())?;
    Ok(())
}

/// Emits the counting verification for `terms` against `kappa` with `blocks`
/// bits, on one reused ancilla or one ancilla per bit.
fn counting_check(c: &mut Circuit, terms: &[Term], kappa: usize, blocks: usize, per_bit: bool) -> Result<(), BuildError> {
    if per_bit {
        let anc = c.add_ancilla(blocks);
        for &a in &anc {
            c.gate(Gate::h(a))?;
        }
        // diagonal schedule: at step t ancilla j takes term t − j
        for t in 0..terms.len() + blocks - 1 {
            for (j, &a) in anc.iter().enumerate() {
                if let Some(term) = t.checked_sub(j).and_then(|i| terms.get(i)) {
                    controlled_rz(c, term, a, block_angle(j))?;
                }
            }
        }
        for (j, &a) in anc.iter().enumerate() {
            c.gate(Gate::u1q(a, Mat2::h() * block_correction(kappa, j)))?;
        }
        c.push(Instruction::PostSelectZero(anc.clone()))?;
        for &a in &anc {
            c.push(Instruction::Reset(a))?;
        }
    } else {
        let a = c.add_ancilla(1)[0];
        for j in 0..blocks {
            c.gate(Gate::h(a))?;
            for term in terms {
                controlled_rz(c, term, a, block_angle(j))?;
            }
            c.gate(Gate::u1q(a, Mat2::h() * block_correction(kappa, j)))?;
            c.push(Instruction::PostSelectZero(vec![a]))?;
            c.push(Instruction::Reset(a))?;
        }
    }
    Ok(())
}

/// Accepts basis states of Hamming weight exactly k.
pub fn khot_filter(n: usize, k: usize, variant: KHotVariant) -> Result<Circuit, BuildError> {
    if k == 0 || k > n {
        return Err(invalid(format!("k = {k} must lie in 1..={n}")));
    }
    let mut c = Circuit::new(n);
    let terms: Vec<Term> = (0..n).map(|w| vec![Control::on(w)]).collect();
    counting_check(&mut c, &terms, k, count_blocks(n), variant == KHotVariant::LogAncilla)?;
    Ok(c)
}

/// Flags every adjacent pair holding 0 on wire i and 1 on wire i+1.
pub fn domainwall_filter(n: usize, variant: DomainWallVariant) -> Result<Circuit, BuildError> {
    if n < 2 {
        return Err(invalid(format!("n = {n} must be at least 2")));
    }
    let check = |i: usize, t: usize| Gate::Mcx { controls: vec![Control::off(i), Control::on(i + 1)], target: t };
    match variant {
        DomainWallVariant::Parallel => {
            let mut c = Circuit::with_ancilla(n, n - 1);
            for i in (0..n - 1).step_by(2).chain((1..n - 1).step_by(2)) {
                c.gate(check(i, n + i))?;
            }
            c.push(Instruction::PostSelectZero((n..2 * n - 1).collect()))?;
            Ok(c)
        }
        DomainWallVariant::Inductive => {
            let mut c = Circuit::with_ancilla(n, 1);
            for i in 0..n - 1 {
                c.gate(check(i, n))?;
                c.push(Instruction::PostSelectZero(vec![n]))?;
                c.push(Instruction::Reset(n))?;
            }
            Ok(c)
        }
    }
}

/// Accepts binary values ≤ μ. One multi-controlled X per zero bit i of μ fires
/// when the higher bits equal μ's and bit i is 1.
pub fn binary_bound_filter(n: usize, mu: u64, checks: BoundCheck) -> Result<Circuit, BuildError> {
    if n == 0 || n > 63 || mu >= 1u64 << n {
        return Err(invalid(format!("mu {mu} does not fit in {n} bits")));
    }
    let zero_bits: Vec<usize> = (0..n).rev().filter(|i| mu >> i & 1 == 0).collect();
    let take = match checks {
        BoundCheck::Full => zero_bits.len(),
        BoundCheck::Partial(c) => c.min(zero_bits.len()),
    };
    if take == 0 {
        return Ok(Circuit::new(n));
    }
    let mut c = Circuit::with_ancilla(n, 1);
    for &i in &zero_bits[..take] {
        let mut controls: Vec<Control> =
            (i + 1..n).rev().map(|j| Control { wire: j, closed: mu >> j & 1 == 1 }).collect();
        controls.push(Control::on(i));
        c.gate(Gate::Mcx { controls, target: n })?;
        c.push(Instruction::PostSelectZero(vec![n]))?;
        c.push(Instruction::Reset(n))?;
    }
    Ok(c)
}

/// Gray → binary, the bound filter, then the conversion undone.
pub fn gray_bound_filter(n: usize, mu: u64) -> Result<Circuit, BuildError> {
    let bound = binary_bound_filter(n, mu, BoundCheck::Full)?;
    if n < 2 {
        return Ok(bound);
    }
    let conv = gray_to_binary(n)?;
    let mut c = Circuit::with_ancilla(n, bound.n_qubits() - n);
    c.append(&conv)?;
    c.append(&bound)?;
    c.append(&inverse(&conv)?)?;
    Ok(c)
}

/// Value of a mixed-encoded basis state: group ḡ (1-based, wires
/// (ḡ−1)m…ḡm−1) holding x gives (ḡ−1)(2^m−1) + x − 1. `None` unless exactly
/// one group is nonzero.
pub fn mixed_decode(l: usize, m: usize, x: u64) -> Option<u64> {
    let mask = (1u64 << m) - 1;
    let mut found = None;
    for g in 0..l {
        let v = (x >> (g * m)) & mask;
        if v != 0 {
            if found.is_some() {
                return None;
            }
            found = Some((g as u64) * mask + v - 1);
        }
    }
    found
}

/// Accepts states with exactly one nonzero group, and with the last group's
/// value ≤ μ_last when given.
pub fn mixed_filter(l: usize, m: usize, variant: MixedVariant, mu_last: Option<u64>) -> Result<Circuit, BuildError> {
    if l == 0 || m == 0 {
        return Err(invalid("l and m must be positive"));
    }
    let n = l * m;
    let group_zero = |g: usize| -> Vec<Control> { (g * m..(g + 1) * m).map(Control::off).collect() };
    let mut c = Circuit::new(n);
    match variant {
        MixedVariant::CountSigma1 | MixedVariant::CountSiglog => {
            let terms: Vec<Term> = (0..l).map(group_zero).collect();
            counting_check(&mut c, &terms, l - 1, count_blocks(l), variant == MixedVariant::CountSiglog)?;
        }
        MixedVariant::StoreOnehot => {
            let flags = c.add_ancilla(l);
            for (g, &f) in flags.iter().enumerate() {
                c.gate(Gate::Mcx { controls: group_zero(g), target: f })?;
                c.gate(Gate::x(f))?;
            }
            if l == 1 {
                // a single group must be nonzero: its flag must read 1
                c.gate(Gate::x(flags[0]))?;
                c.push(Instruction::PostSelectZero(vec![flags[0]]))?;
                c.gate(Gate::x(flags[0]))?;
            } else {
                let check = onehot_postselect(l)?;
                c.append_mapped(&check, &flags)?;
            }
            for (g, &f) in flags.iter().enumerate() {
                c.gate(Gate::x(f))?;
                c.gate(Gate::Mcx { controls: group_zero(g), target: f })?;
                c.push(Instruction::Reset(f))?;
            }
        }
    }
    if let Some(mu) = mu_last {
        let bound = binary_bound_filter(m, mu, BoundCheck::Full)?;
        if bound.n_qubits() > m {
            let anc = c.add_ancilla(1)[0];
            let mut map: Vec<usize> = ((l - 1) * m..n).collect();
            map.push(anc);
            c.append_mapped(&bound, &map)?;
        }
    }
    Ok(c)
}
