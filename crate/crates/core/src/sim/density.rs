use super::{NoiseFamily, NoiseModel, SimError, SubspaceSpec, REJECT_THRESHOLD};
use crate::circuit::{Circuit, Gate, Instruction};
use crate::linalg::{Mat2, ZERO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Dense density matrix plus the accumulated post-selection acceptance.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityState {
    n: usize,
    dim: usize,
    rho: Vec<C64>,
    acceptance: f64,
}

/// Debug dump of a state, row-major `[re, im]` entries.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DensityDump {
    pub n_qubits: usize,
    pub acceptance: f64,
    pub rho: Vec<[f64; 2]>,
}

const DUMP_LIMIT: usize = 10;

impl DensityState {
    pub fn basis(n: usize, index: usize) -> Result<Self, SimError> {
        let dim = 1usize << n;
        if index >= dim {
            return Err(SimError::BadIndex { index, n });
        }
        let mut rho = vec![ZERO; dim * dim];
        rho[index * dim + index] = C64::new(1.0, 0.0);
        Ok(Self { n, dim, rho, acceptance: 1.0 })
    }

    pub fn zero(n: usize) -> Self {
        Self::basis(n, 0).expect("index 0 always exists")
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1usize << n;
        let mut rho = vec![ZERO; dim * dim];
        for i in 0..dim {
            rho[i * dim + i] = C64::new(1.0 / dim as f64, 0.0);
        }
        Self { n, dim, rho, acceptance: 1.0 }
    }

    /// |ψ⟩⟨ψ| for a normalized ψ.
    pub fn from_statevector(n: usize, psi: &[C64]) -> Result<Self, SimError> {
        let dim = 1usize << n;
        if psi.len() != dim {
            return Err(SimError::LengthMismatch { expected: dim, got: psi.len() });
        }
        let mut rho = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                rho[r * dim + c] = psi[r] * psi[c].conj();
            }
        }
        Self::from_matrix(n, rho)
    }

    /// Takes a row-major matrix; checks shape, trace and Hermiticity.
    pub fn from_matrix(n: usize, rho: Vec<C64>) -> Result<Self, SimError> {
        let dim = 1usize << n;
        if rho.len() != dim * dim {
            return Err(SimError::LengthMismatch { expected: dim * dim, got: rho.len() });
        }
        let s = Self { n, dim, rho, acceptance: 1.0 };
        if (s.trace() - 1.0).abs() > 1e-10 {
            return Err(SimError::InvalidState(format!("trace {}", s.trace())));
        }
        if s.hermiticity_error() > 1e-10 {
            return Err(SimError::InvalidState("not Hermitian".into()));
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rho(&self) -> &[C64] {
        &self.rho
    }

    pub fn entry(&self, r: usize, c: usize) -> C64 {
        self.rho[r * self.dim + c]
    }

    pub fn acceptance(&self) -> f64 {
        self.acceptance
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.rho[i * self.dim + i].re).sum()
    }

    /// Diagonal of ρ: the computational-basis outcome distribution.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.rho[i * self.dim + i].re).collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim;
        let mut m: f64 = 0.0;
        for r in 0..d {
            for c in r..d {
                m = m.max((self.rho[r * d + c] - self.rho[c * d + r].conj()).norm());
            }
        }
        m
    }

    fn check_wire(&self, w: usize) -> Result<(), SimError> {
        if w >= self.n {
            return Err(SimError::WidthMismatch { state: self.n, needed: w + 1 });
        }
        Ok(())
    }

    /// ρ ↦ UρU† on one wire.
    pub fn apply_1q(&mut self, w: usize, u: &Mat2) -> Result<(), SimError> {
        self.check_wire(w)?;
        let d = self.dim;
        let bit = 1usize << w;
        let [[a, b], [c, e]] = u.0;
        for r0 in (0..d).filter(|r| r & bit == 0) {
            let r1 = r0 | bit;
            let (lo, hi) = self.rho.split_at_mut(r1 * d);
            let row0 = &mut lo[r0 * d..r0 * d + d];
            let row1 = &mut hi[..d];
            for (x0, x1) in row0.iter_mut().zip(row1.iter_mut()) {
                let (p, q) = (*x0, *x1);
                *x0 = a * p + b * q;
                *x1 = c * p + e * q;
            }
        }
        let (ac, bc, cc, ec) = (a.conj(), b.conj(), c.conj(), e.conj());
        for row in self.rho.chunks_exact_mut(d) {
            for c0 in (0..d).filter(|c| c & bit == 0) {
                let c1 = c0 | bit;
                let (p, q) = (row[c0], row[c1]);
                row[c0] = p * ac + q * bc;
                row[c1] = p * cc + q * ec;
            }
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<(), SimError> {
        self.check_wire(control)?;
        self.check_wire(target)?;
        let d = self.dim;
        let (cb, tb) = (1usize << control, 1usize << target);
        let perm = |i: usize| if i & cb != 0 { i ^ tb } else { i };
        // rows
        for r in 0..d {
            if r & cb != 0 && r & tb == 0 {
                let s = r | tb;
                for c in 0..d {
                    self.rho.swap(r * d + c, s * d + c);
                }
            }
        }
        // columns
        for row in self.rho.chunks_exact_mut(d) {
            for c in 0..d {
                let p = perm(c);
                if p > c {
                    row.swap(c, p);
                }
            }
        }
        Ok(())
    }

    /// ρ ↦ Σ K ρ K† for Kraus operators acting on one wire.
    ///
    /// The Kraus sum is folded into a sparse map on each 2×2 block
    /// (row bit, column bit), so the cost does not grow with the Kraus count.
    pub fn apply_kraus_1q(&mut self, w: usize, kraus: &[Mat2]) -> Result<(), SimError> {
        self.check_wire(w)?;
        let mut terms: Vec<(usize, usize, C64)> = Vec::with_capacity(16);
        for out in 0..4 {
            for inp in 0..4 {
                let (i, j, k, l) = (out >> 1, out & 1, inp >> 1, inp & 1);
                let v: C64 = kraus.iter().map(|m| m.0[i][k] * m.0[j][l].conj()).sum();
                if v.norm() > 1e-300 {
                    terms.push((out, inp, v));
                }
            }
        }
        let d = self.dim;
        let bit = 1usize << w;
        for r0 in (0..d).filter(|r| r & bit == 0) {
            for c0 in (0..d).filter(|c| c & bit == 0) {
                let idx = [r0 * d + c0, r0 * d + c0 + bit, (r0 + bit) * d + c0, (r0 + bit) * d + c0 + bit];
                let blk = idx.map(|i| self.rho[i]);
                let mut out = [ZERO; 4];
                for &(o, i, v) in &terms {
                    out[o] += v * blk[i];
                }
                for (k, &i) in idx.iter().enumerate() {
                    self.rho[i] = out[k];
                }
            }
        }
        Ok(())
    }

    /// ρ ↦ (1−γ)ρ + γ·(I/d ⊗ Tr_sub ρ) on the subsystem `wires`.
    pub fn depolarize(&mut self, wires: &[usize], gamma: f64) -> Result<(), SimError> {
        for &w in wires {
            self.check_wire(w)?;
        }
        let d = self.dim;
        let mask: usize = wires.iter().map(|w| 1usize << w).sum();
        let sub = 1usize << wires.len();
        let offsets: Vec<usize> = (0..sub)
            .map(|s| wires.iter().enumerate().filter(|(k, _)| s >> k & 1 == 1).map(|(_, w)| 1usize << w).sum())
            .collect();
        let keep = 1.0 - gamma;
        let mix = gamma / sub as f64;
        for rb in (0..d).filter(|r| r & mask == 0) {
            for cb in (0..d).filter(|c| c & mask == 0) {
                let partial: C64 = offsets.iter().map(|o| self.rho[(rb | o) * d + (cb | o)]).sum();
                for &ro in &offsets {
                    for &co in &offsets {
                        let idx = (rb | ro) * d + (cb | co);
                        self.rho[idx] *= keep;
                        if ro == co {
                            self.rho[idx] += partial * mix;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies the noise channel on the wires of a gate.
    pub fn apply_noise(&mut self, wires: &[usize], noise: &NoiseModel) -> Result<(), SimError> {
        if noise.is_noiseless() {
            return Ok(());
        }
        match noise.family() {
            NoiseFamily::None => Ok(()),
            NoiseFamily::Depolarizing => self.depolarize(wires, noise.gamma()),
            NoiseFamily::AmplitudeDamping | NoiseFamily::RandomX => {
                let k = noise.kraus_1q();
                for &w in wires {
                    self.apply_kraus_1q(w, &k)?;
                }
                Ok(())
            }
        }
    }

    /// A transpiled gate followed by the noise channel on its wires.
    pub fn apply_gate(&mut self, gate: &Gate, noise: &NoiseModel) -> Result<(), SimError> {
        match gate {
            Gate::U1q { wire, matrix } => {
                self.apply_1q(*wire, matrix)?;
                self.apply_noise(&[*wire], noise)
            }
            Gate::Cnot { control, target } => {
                self.apply_cnot(*control, *target)?;
                self.apply_noise(&[*control, *target], noise)
            }
            Gate::Barrier { .. } => Ok(()),
            other => Err(SimError::NotTranspiled(other.name())),
        }
    }

    /// Projects `wires` onto |0…0⟩ and renormalizes. Returns the branch
    /// probability; below the rejection threshold the state is left untouched.
    pub fn postselect_zero(&mut self, wires: &[usize]) -> Result<f64, SimError> {
        for &w in wires {
            self.check_wire(w)?;
        }
        let mask: usize = wires.iter().map(|w| 1usize << w).sum();
        self.project(|i| i & mask == 0)
    }

    /// Π_S ρ Π_S / tr with the acceptance updated.
    pub fn classical_postselect(&mut self, s: &SubspaceSpec) -> Result<f64, SimError> {
        if s.n_qubits() != self.n {
            return Err(SimError::WidthMismatch { state: self.n, needed: s.n_qubits() });
        }
        self.project(|i| s.contains(i))
    }

    fn project(&mut self, keep: impl Fn(usize) -> bool) -> Result<f64, SimError> {
        let d = self.dim;
        let keep: Vec<bool> = (0..d).map(keep).collect();
        let p: f64 = (0..d).filter(|&i| keep[i]).map(|i| self.rho[i * d + i].re).sum();
        if p < REJECT_THRESHOLD {
            return Err(SimError::Rejected(p.max(0.0)));
        }
        let inv = 1.0 / p;
        for (r, row) in self.rho.chunks_exact_mut(d).enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = if keep[r] && keep[c] { *x * inv } else { ZERO };
            }
        }
        self.acceptance *= p;
        Ok(p)
    }

    /// Non-selective Z measurement: removes coherences across the wire.
    pub fn measure_z(&mut self, w: usize) -> Result<(), SimError> {
        self.check_wire(w)?;
        let d = self.dim;
        let bit = 1usize << w;
        for (r, row) in self.rho.chunks_exact_mut(d).enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                if (r ^ c) & bit != 0 {
                    *x = ZERO;
                }
            }
        }
        Ok(())
    }

    /// Traces out the wire and re-prepares it in |0⟩.
    pub fn reset(&mut self, w: usize) -> Result<(), SimError> {
        let k0 = Mat2::new(C64::new(1.0, 0.0), ZERO, ZERO, ZERO);
        let k1 = Mat2::new(ZERO, C64::new(1.0, 0.0), ZERO, ZERO);
        self.apply_kraus_1q(w, &[k0, k1])
    }

    pub fn apply_instruction(&mut self, ins: &Instruction, noise: &NoiseModel) -> Result<(), SimError> {
        match ins {
            Instruction::Gate(g) => self.apply_gate(g, noise),
            Instruction::MeasureZ(w) => self.measure_z(*w),
            Instruction::MeasureX(w) => {
                self.apply_1q(*w, &Mat2::h())?;
                self.measure_z(*w)
            }
            Instruction::PostSelectZero(ws) => self.postselect_zero(ws).map(|_| ()),
            Instruction::Reset(w) => self.reset(*w),
        }
    }

    /// Σ_z H[z]·ρ[z,z].
    pub fn expectation(&self, h: &[f64]) -> Result<f64, SimError> {
        if h.len() != self.dim {
            return Err(SimError::LengthMismatch { expected: self.dim, got: h.len() });
        }
        Ok(h.iter().enumerate().map(|(i, e)| e * self.rho[i * self.dim + i].re).sum())
    }

    /// (tr P1ρ, tr P2ρ, tr P3ρ) with P1 = |ideal⟩⟨ideal|, P2 = Π_S − P1 and
    /// P3 = I − Π_S.
    pub fn subspace_overlaps(&self, ideal: &[C64], s: &SubspaceSpec) -> Result<(f64, f64, f64), SimError> {
        let d = self.dim;
        if ideal.len() != d {
            return Err(SimError::LengthMismatch { expected: d, got: ideal.len() });
        }
        let norm: f64 = ideal.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(SimError::InvalidState(format!("ideal state norm² {norm}")));
        }
        let outside: f64 = ideal.iter().enumerate().filter(|(i, _)| !s.contains(*i)).map(|(_, a)| a.norm_sqr()).sum();
        if outside > 1e-10 {
            return Err(SimError::NotInSubspace);
        }
        let tr = self.trace();
        let mut p1 = ZERO;
        for r in 0..d {
            if ideal[r] == ZERO {
                continue;
            }
            for c in 0..d {
                p1 += ideal[r].conj() * self.rho[r * d + c] * ideal[c];
            }
        }
        let in_s: f64 = s.indices().map(|i| self.rho[i * d + i].re).sum();
        Ok((p1.re, in_s - p1.re, tr - in_s))
    }

    /// Reduced state of the listed wires, traced over the others; bit k of
    /// the reduced index is `wires[k]`.
    pub fn reduced(&self, wires: &[usize]) -> Result<DensityState, SimError> {
        for &w in wires {
            self.check_wire(w)?;
        }
        let m = wires.len();
        let dm = 1usize << m;
        let mask: usize = wires.iter().map(|w| 1usize << w).sum();
        let spread = |s: usize| -> usize {
            wires.iter().enumerate().filter(|(k, _)| s >> k & 1 == 1).map(|(_, w)| 1usize << w).sum()
        };
        let mut out = vec![ZERO; dm * dm];
        for env in (0..self.dim).filter(|e| e & mask == 0) {
            for a in 0..dm {
                for b in 0..dm {
                    out[a * dm + b] += self.rho[(env | spread(a)) * self.dim + (env | spread(b))];
                }
            }
        }
        Ok(DensityState { n: m, dim: dm, rho: out, acceptance: self.acceptance })
    }

    pub fn to_dump(&self) -> Result<DensityDump, SimError> {
        if self.n > DUMP_LIMIT {
            return Err(SimError::TooLarge { n: self.n, max: DUMP_LIMIT });
        }
        Ok(DensityDump {
            n_qubits: self.n,
            acceptance: self.acceptance,
            rho: self.rho.iter().map(|z| [z.re, z.im]).collect(),
        })
    }
}

/// Runs a transpiled circuit from a computational basis state.
pub fn run(circuit: &Circuit, noise: &NoiseModel, initial: usize) -> Result<DensityState, SimError> {
    let mut s = DensityState::basis(circuit.n_qubits(), initial)?;
    run_from(&mut s, circuit, noise)?;
    Ok(s)
}

/// Folds the instructions of a transpiled circuit over an existing state.
pub fn run_from(state: &mut DensityState, circuit: &Circuit, noise: &NoiseModel) -> Result<(), SimError> {
    if circuit.n_qubits() != state.n {
        return Err(SimError::WidthMismatch { state: state.n, needed: circuit.n_qubits() });
    }
    for ins in circuit.instructions() {
        state.apply_instruction(ins, noise)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: f64) -> bool {
        (a - C64::new(b, 0.0)).norm() < 1e-12
    }

    #[test]
    fn depolarizing_full_gives_identity() {
        let mut s = DensityState::zero(1);
        s.apply_noise(&[0], &NoiseModel::new(NoiseFamily::Depolarizing, 1.0).unwrap()).unwrap();
        assert!(close(s.entry(0, 0), 0.5) && close(s.entry(1, 1), 0.5));
        let mut s = DensityState::basis(2, 2).unwrap();
        s.apply_noise(&[0, 1], &NoiseModel::new(NoiseFamily::Depolarizing, 1.0).unwrap()).unwrap();
        for i in 0..4 {
            assert!(close(s.entry(i, i), 0.25));
        }
    }

    #[test]
    fn amplitude_damping_full_decay() {
        let mut s = DensityState::basis(1, 1).unwrap();
        s.apply_noise(&[0], &NoiseModel::new(NoiseFamily::AmplitudeDamping, 1.0).unwrap()).unwrap();
        assert!(close(s.entry(0, 0), 1.0) && close(s.entry(1, 1), 0.0));
    }

    #[test]
    fn random_x_mixes() {
        let mut s = DensityState::zero(1);
        s.apply_noise(&[0], &NoiseModel::new(NoiseFamily::RandomX, 0.3).unwrap()).unwrap();
        assert!(close(s.entry(0, 0), 0.7) && close(s.entry(1, 1), 0.3));
    }

    #[test]
    fn postselect_plus_state() {
        let mut s = DensityState::zero(1);
        s.apply_1q(0, &Mat2::h()).unwrap();
        let p = s.postselect_zero(&[0]).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert!(close(s.entry(0, 0), 1.0));
        assert!((s.acceptance() - 0.5).abs() < 1e-12);
        let mut s = DensityState::basis(1, 1).unwrap();
        assert!(matches!(s.postselect_zero(&[0]), Err(SimError::Rejected(_))));
    }

    #[test]
    fn reset_discards_wire() {
        let mut s = DensityState::basis(2, 3).unwrap();
        s.reset(0).unwrap();
        assert!(close(s.entry(2, 2), 1.0));
    }

    #[test]
    fn cnot_flips_target() {
        let mut s = DensityState::basis(2, 1).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert!(close(s.entry(3, 3), 1.0));
    }

    #[test]
    fn overlaps_of_mixed_state() {
        let s = DensityState::maximally_mixed(2);
        let spec = SubspaceSpec::from_indices(2, &[1, 2]).unwrap();
        let mut ideal = vec![ZERO; 4];
        ideal[1] = C64::new(1.0, 0.0);
        let (p1, p2, p3) = s.subspace_overlaps(&ideal, &spec).unwrap();
        assert!((p1 - 0.25).abs() < 1e-12 && (p2 - 0.25).abs() < 1e-12 && (p3 - 0.5).abs() < 1e-12);
    }
}
