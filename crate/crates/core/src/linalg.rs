//! Small dense helpers shared by the circuit IR and the simulators.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::ops::Mul;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// A 2×2 complex matrix, row-major.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self([[a, b], [c, d]])
    }

    pub fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub fn y() -> Self {
        Self::new(ZERO, -I, I, ZERO)
    }

    pub fn z() -> Self {
        Self::new(ONE, ZERO, ZERO, -ONE)
    }

    pub fn h() -> Self {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        Self::new(s, s, s, -s)
    }

    /// diag(1, e^{iφ})
    pub fn phase(phi: f64) -> Self {
        Self::new(ONE, ZERO, ZERO, C64::from_polar(1.0, phi))
    }

    pub fn diag(a: C64, b: C64) -> Self {
        Self::new(a, ZERO, ZERO, b)
    }

    pub fn rz(theta: f64) -> Self {
        Self::diag(C64::from_polar(1.0, -theta / 2.0), C64::from_polar(1.0, theta / 2.0))
    }

    pub fn ry(theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self::new(C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0))
    }

    pub fn rx(theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self::new(C64::new(c, 0.0), C64::new(0.0, -s), C64::new(0.0, -s), C64::new(c, 0.0))
    }

    pub fn t() -> Self {
        Self::phase(PI / 4.0)
    }

    pub fn tdg() -> Self {
        Self::phase(-PI / 4.0)
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn det(&self) -> C64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    /// Largest entrywise deviation of U†U from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.adjoint() * *self;
        max_abs_diff(&p, &Self::identity())
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.0[0][1].norm() <= tol && self.0[1][0].norm() <= tol
    }

    /// Principal square root of a unitary 2×2 matrix.
    pub fn sqrt_unitary(&self) -> Self {
        // sqrt(U) = (U + s I) / sqrt(tr U + 2 s) with s = ±sqrt(det U); pick the
        // sign that keeps the denominator away from zero.
        let s0 = self.det().sqrt();
        let tr = self.trace();
        let s = if (tr + 2.0 * s0).norm() >= (tr - 2.0 * s0).norm() { s0 } else { -s0 };
        let denom = (tr + 2.0 * s).sqrt();
        let m = &self.0;
        Self::new((m[0][0] + s) / denom, m[0][1] / denom, m[1][0] / denom, (m[1][1] + s) / denom)
    }

    /// Z-Y-Z Euler angles: U = e^{iα} Rz(β) Ry(γ) Rz(δ). Returns (α, β, γ, δ).
    pub fn zyz(&self) -> (f64, f64, f64, f64) {
        let alpha = self.det().arg() / 2.0;
        let w = self.scale(C64::from_polar(1.0, -alpha)).0;
        let c = w[0][0].norm();
        let s = w[1][0].norm();
        let gamma = 2.0 * s.atan2(c);
        // W11 = e^{i(β+δ)/2} cos, W10 = e^{i(β−δ)/2} sin; a vanishing factor
        // leaves its combination free.
        let sum = if c > 1e-12 { 2.0 * w[1][1].arg() } else { 0.0 };
        let diff = if s > 1e-12 { 2.0 * w[1][0].arg() } else { 0.0 };
        (alpha, (sum + diff) / 2.0, gamma, (sum - diff) / 2.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }
}

pub fn max_abs_diff(a: &Mat2, b: &Mat2) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a.0[i][j] - b.0[i][j]).norm());
        }
    }
    m
}

/// Max-norm distance between two square matrices after removing the best global
/// phase of `b` relative to `a`.
pub fn phase_insensitive_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let overlap: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 1e-300 { overlap / overlap.norm() } else { ONE };
    a.iter()
        .zip(b)
        .map(|(x, y)| (x * phase - y).norm())
        .fold(0.0, f64::max)
}

pub fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

/// ⌈log2 n⌉ for n ≥ 1.
pub fn ceil_log2(n: usize) -> usize {
    assert!(n >= 1);
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_unitary(seed: u64) -> Mat2 {
        // product of rotations with irrational-ish angles
        let a = (seed as f64 * 0.731).sin() * 3.0;
        let b = (seed as f64 * 1.37).cos() * 2.0;
        let c = (seed as f64 * 2.11).sin() * 4.0;
        let d = seed as f64 * 0.29;
        Mat2::rz(a) * Mat2::ry(b) * Mat2::rz(c) * Mat2::phase(d) * Mat2::rx(a * b)
    }

    #[test]
    fn zyz_reconstructs() {
        for seed in 0..50 {
            let u = random_unitary(seed);
            let (al, be, ga, de) = u.zyz();
            let r = (Mat2::rz(be) * Mat2::ry(ga) * Mat2::rz(de)).scale(C64::from_polar(1.0, al));
            assert!(max_abs_diff(&u, &r) < 1e-12, "seed {seed}");
        }
        for u in [Mat2::x(), Mat2::z(), Mat2::identity(), Mat2::h(), Mat2::phase(0.3)] {
            let (al, be, ga, de) = u.zyz();
            let r = (Mat2::rz(be) * Mat2::ry(ga) * Mat2::rz(de)).scale(C64::from_polar(1.0, al));
            assert!(max_abs_diff(&u, &r) < 1e-12);
        }
    }

    #[test]
    fn sqrt_squares_back() {
        for seed in 0..50 {
            let u = random_unitary(seed);
            let v = u.sqrt_unitary();
            assert!(max_abs_diff(&(v * v), &u) < 1e-12);
            assert!(v.unitarity_error() < 1e-12);
        }
        let v = Mat2::x().sqrt_unitary();
        assert!(max_abs_diff(&(v * v), &Mat2::x()) < 1e-12);
        let v = Mat2::identity().scale(-ONE).sqrt_unitary();
        assert!(max_abs_diff(&(v * v), &Mat2::identity().scale(-ONE)) < 1e-12);
    }

    #[test]
    fn log2() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(4), 2);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(9), 4);
    }
}
