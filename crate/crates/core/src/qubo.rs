//! QUBO and Ising models, the travelling-salesman QUBO and exhaustive spectra.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QuboError {
    #[error("{n} variables exceeds the brute-force limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("degenerate spectrum: E_max = E_min = {0}")]
    Degenerate(f64),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("variable {0} out of range")]
    BadVariable(usize),
}

pub const BRUTE_FORCE_LIMIT: usize = 24;

/// energy(x) = offset + Σ_{i≤j} Q_ij x_i x_j with x_i = bit i of the index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuboModel {
    n: usize,
    q: Vec<f64>,
    offset: f64,
}

impl QuboModel {
    pub fn new(n: usize) -> Self {
        Self { n, q: vec![0.0; n * n], offset: 0.0 }
    }

    /// From a dense row-major matrix; entries below the diagonal are folded
    /// onto their mirror above it.
    pub fn from_dense(n: usize, m: &[f64]) -> Result<Self, QuboError> {
        if m.len() != n * n {
            return Err(QuboError::InvalidInstance(format!("expected {} entries, got {}", n * n, m.len())));
        }
        let mut out = Self::new(n);
        for i in 0..n {
            for j in 0..n {
                out.add(i, j, m[i * n + j])?;
            }
        }
        Ok(out)
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn add_offset(&mut self, v: f64) {
        self.offset += v;
    }

    /// Q_ij for i ≤ j (arguments in either order).
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.q[a * self.n + b]
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<(), QuboError> {
        let bad = i.max(j);
        if bad >= self.n {
            return Err(QuboError::BadVariable(bad));
        }
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.q[a * self.n + b] += v;
        Ok(())
    }

    pub fn energy(&self, x: u64) -> f64 {
        let mut e = self.offset;
        for i in (0..self.n).filter(|i| x >> i & 1 == 1) {
            for j in (i..self.n).filter(|j| x >> j & 1 == 1) {
                e += self.q[i * self.n + j];
            }
        }
        e
    }

    /// All 2^n energies, built incrementally by clearing the lowest set bit.
    pub fn energies(&self) -> Result<Vec<f64>, QuboError> {
        if self.n > BRUTE_FORCE_LIMIT {
            return Err(QuboError::TooLarge { n: self.n, max: BRUTE_FORCE_LIMIT });
        }
        let size = 1usize << self.n;
        let mut e = vec![0.0; size];
        e[0] = self.offset;
        for x in 1..size {
            let b = x.trailing_zeros() as usize;
            let rest = x & (x - 1);
            let mut v = e[rest] + self.q[b * self.n + b];
            let mut r = rest;
            while r != 0 {
                let j = r.trailing_zeros() as usize;
                v += self.q[b * self.n + j];
                r &= r - 1;
            }
            e[x] = v;
        }
        Ok(e)
    }

    /// Substitutes fixed values; the free variables keep their relative order.
    pub fn fix_variables(&self, fixed: &[(usize, bool)]) -> Result<QuboModel, QuboError> {
        let mut value: Vec<Option<bool>> = vec![None; self.n];
        for &(i, v) in fixed {
            *value.get_mut(i).ok_or(QuboError::BadVariable(i))? = Some(v);
        }
        let free: Vec<usize> = (0..self.n).filter(|&i| value[i].is_none()).collect();
        let mut index = vec![usize::MAX; self.n];
        for (k, &i) in free.iter().enumerate() {
            index[i] = k;
        }
        let mut out = QuboModel::new(free.len());
        out.offset = self.offset;
        for i in 0..self.n {
            for j in i..self.n {
                let c = self.q[i * self.n + j];
                if c == 0.0 {
                    continue;
                }
                match (value[i], value[j]) {
                    (Some(false), _) | (_, Some(false)) => {}
                    (Some(true), Some(true)) => out.offset += c,
                    (Some(true), None) => out.add(index[j], index[j], c)?,
                    (None, Some(true)) => out.add(index[i], index[i], c)?,
                    (None, None) => out.add(index[i], index[j], c)?,
                }
            }
        }
        Ok(out)
    }

    pub fn to_ising(&self) -> IsingModel {
        let n = self.n;
        let mut m = IsingModel::new(n);
        m.offset = self.offset;
        for i in 0..n {
            let d = self.q[i * n + i];
            m.offset += d / 2.0;
            m.h[i] += d / 2.0;
            for j in i + 1..n {
                let c = self.q[i * n + j];
                m.offset += c / 4.0;
                m.h[i] += c / 4.0;
                m.h[j] += c / 4.0;
                m.j[i * n + j] -= c / 4.0;
            }
        }
        m
    }
}

/// H(s) = offset − Σ_{i<j} J_ij s_i s_j − Σ_i h_i s_i, with s_i = 1 − 2x_i so
/// that bit value 0 is spin +1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingModel {
    n: usize,
    j: Vec<f64>,
    h: Vec<f64>,
    offset: f64,
}

impl IsingModel {
    pub fn new(n: usize) -> Self {
        Self { n, j: vec![0.0; n * n], h: vec![0.0; n], offset: 0.0 }
    }

    pub fn num_spins(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// J_ij for i < j.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.j[a * self.n + b]
    }

    /// Nonzero couplings as (i, j, J_ij) with i < j.
    pub fn couplings(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j, self.j[i * n + j]))).filter(|t| t.2 != 0.0)
    }

    pub fn set_coupling(&mut self, i: usize, j: usize, v: f64) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.j[a * self.n + b] = v;
    }

    pub fn set_field(&mut self, i: usize, v: f64) {
        self.h[i] = v;
    }

    pub fn set_offset(&mut self, v: f64) {
        self.offset = v;
    }

    pub fn energy(&self, x: u64) -> f64 {
        let s = |i: usize| if x >> i & 1 == 1 { -1.0 } else { 1.0 };
        let mut e = self.offset;
        for i in 0..self.n {
            e -= self.h[i] * s(i);
            for j in i + 1..self.n {
                e -= self.j[i * self.n + j] * s(i) * s(j);
            }
        }
        e
    }

    pub fn to_qubo(&self) -> QuboModel {
        let n = self.n;
        let mut q = QuboModel::new(n);
        q.offset = self.offset;
        for i in 0..n {
            let h = self.h[i];
            q.offset -= h;
            q.q[i * n + i] += 2.0 * h;
            for j in i + 1..n {
                let c = self.j[i * n + j];
                q.offset -= c;
                q.q[i * n + i] += 2.0 * c;
                q.q[j * n + j] += 2.0 * c;
                q.q[i * n + j] -= 4.0 * c;
            }
        }
        q
    }
}

/// Exhaustive spectrum of a model.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub min: f64,
    pub max: f64,
    pub energies: Vec<f64>,
    pub argmin: Vec<u64>,
}

pub fn brute_spectrum(q: &QuboModel) -> Result<Spectrum, QuboError> {
    let energies = q.energies()?;
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let argmin = (0..energies.len() as u64).filter(|&x| energies[x as usize] == min).collect();
    Ok(Spectrum { min, max, energies, argmin })
}

/// (E − E_min)/(E_max − E_min).
pub fn normalize_energy(e: f64, e_min: f64, e_max: f64) -> Result<f64, QuboError> {
    if e_max <= e_min {
        return Err(QuboError::Degenerate(e_min));
    }
    Ok((e - e_min) / (e_max - e_min))
}

/// N cities with integer costs W (diagonal ignored) and penalty A.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TspInstance {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "W")]
    pub w: Vec<Vec<i64>>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<i64>,
}

impl TspInstance {
    /// Uses the default penalty A = 2·max W.
    pub fn new(w: Vec<Vec<i64>>) -> Result<Self, QuboError> {
        let inst = Self { n: w.len(), w, a: None };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), QuboError> {
        if self.n < 2 {
            return Err(QuboError::InvalidInstance(format!("N = {} must be at least 2", self.n)));
        }
        if self.w.len() != self.n || self.w.iter().any(|r| r.len() != self.n) {
            return Err(QuboError::InvalidInstance("W must be N×N".into()));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self, QuboError> {
        let inst: TspInstance = serde_json::from_str(s).map_err(|e| QuboError::InvalidInstance(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn max_cost(&self) -> i64 {
        let mut m = i64::MIN;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    m = m.max(self.w[i][j]);
                }
            }
        }
        m
    }

    pub fn penalty(&self) -> i64 {
        self.a.unwrap_or(2 * self.max_cost())
    }

    /// Variable index of "city i at time t".
    pub fn var(&self, t: usize, i: usize) -> usize {
        t * self.n + i
    }

    /// Cost of visiting cities in the order of `perm` and returning.
    pub fn tour_cost(&self, perm: &[usize]) -> i64 {
        (0..perm.len()).map(|t| self.w[perm[t]][perm[(t + 1) % perm.len()]]).sum()
    }
}

fn add_one_hot_penalty(q: &mut QuboModel, vars: &[usize], a: f64) -> Result<(), QuboError> {
    // A(1 − Σ b)² = A − AΣ b + 2AΣ_{u<v} b_u b_v
    q.add_offset(a);
    for (k, &u) in vars.iter().enumerate() {
        q.add(u, u, -a)?;
        for &v in &vars[k + 1..] {
            q.add(u, v, 2.0 * a)?;
        }
    }
    Ok(())
}

fn tsp_terms(inst: &TspInstance, time_penalty: bool) -> Result<QuboModel, QuboError> {
    inst.validate()?;
    let n = inst.n;
    let a = inst.penalty() as f64;
    let mut q = QuboModel::new(n * n);
    if time_penalty {
        for t in 0..n {
            let vars: Vec<usize> = (0..n).map(|i| inst.var(t, i)).collect();
            add_one_hot_penalty(&mut q, &vars, a)?;
        }
    }
    for i in 0..n {
        let vars: Vec<usize> = (0..n).map(|t| inst.var(t, i)).collect();
        add_one_hot_penalty(&mut q, &vars, a)?;
    }
    for t in 0..n {
        let next = (t + 1) % n;
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                q.add(inst.var(t, i), inst.var(next, j), inst.w[i][j] as f64)?;
            }
        }
    }
    Ok(q)
}

/// Both one-hot penalties with weight A plus the route cost, over N² bits
/// b_{t,i} at index t·N + i.
pub fn tsp_qubo(inst: &TspInstance) -> Result<QuboModel, QuboError> {
    tsp_terms(inst, true)
}

fn fix_first_city(inst: &TspInstance, q: &QuboModel) -> Result<QuboModel, QuboError> {
    let n = inst.n;
    let mut fixed = vec![(inst.var(0, 0), true)];
    fixed.extend((1..n).map(|i| (inst.var(0, i), false)));
    fixed.extend((1..n).map(|t| (inst.var(t, 0), false)));
    q.fix_variables(&fixed)
}

/// City 0 pinned at time 0; (N−1)² bits at index (t−1)(N−1) + (i−1).
pub fn reduced_tsp_qubo(inst: &TspInstance) -> Result<QuboModel, QuboError> {
    fix_first_city(inst, &tsp_qubo(inst)?)
}

/// The reduced model without the one-city-per-time penalty, which the
/// one-hot registers enforce by construction.
pub fn separator_qubo(inst: &TspInstance) -> Result<QuboModel, QuboError> {
    fix_first_city(inst, &tsp_terms(inst, false)?)
}

/// True when the N² bits form a permutation matrix.
pub fn is_valid_tour(x: u64, n: usize) -> bool {
    (0..n).all(|t| (0..n).filter(|&i| x >> (t * n + i) & 1 == 1).count() == 1)
        && (0..n).all(|i| (0..n).filter(|&t| x >> (t * n + i) & 1 == 1).count() == 1)
}

/// Penalty part of the full model: energy minus route cost.
pub fn tsp_penalty(inst: &TspInstance, x: u64) -> Result<f64, QuboError> {
    let full = tsp_qubo(inst)?;
    let mut cost = 0.0;
    let n = inst.n;
    for t in 0..n {
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                if x >> inst.var(t, i) & 1 == 1 && x >> inst.var((t + 1) % n, j) & 1 == 1 {
                    cost += inst.w[i][j] as f64;
                }
            }
        }
    }
    Ok(full.energy(x) - cost)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_ising() {
        let mut q = QuboModel::new(1);
        q.add(0, 0, 6.0).unwrap();
        let m = q.to_ising();
        assert_eq!(m.h()[0], 3.0);
        assert_eq!(m.offset(), 3.0);
        assert_eq!(m.energy(1), 6.0);
        assert_eq!(m.energy(0), 0.0);
    }

    #[test]
    fn zero_model_stays_zero() {
        let q = QuboModel::new(3);
        let m = q.to_ising();
        assert!(m.h().iter().all(|&h| h == 0.0) && m.offset() == 0.0 && m.couplings().count() == 0);
    }

    #[test]
    fn two_city_tour() {
        let inst = TspInstance::new(vec![vec![0, 3], vec![5, 0]]).unwrap();
        let s = brute_spectrum(&tsp_qubo(&inst).unwrap()).unwrap();
        assert_eq!(s.min, 8.0);
        assert_eq!(s.argmin.len(), 2);
        assert!(s.argmin.iter().all(|&x| is_valid_tour(x, 2)));
        let a = inst.penalty() as f64;
        assert_eq!(tsp_qubo(&inst).unwrap().energy(0), 2.0 * a * 2.0);
    }

    #[test]
    fn reduced_sizes() {
        let w3 = vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]];
        assert_eq!(reduced_tsp_qubo(&TspInstance::new(w3).unwrap()).unwrap().num_vars(), 4);
        let w4 = vec![vec![1; 4]; 4];
        assert_eq!(reduced_tsp_qubo(&TspInstance::new(w4).unwrap()).unwrap().num_vars(), 9);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_energy(2.0, 2.0, 6.0).unwrap(), 0.0);
        assert_eq!(normalize_energy(6.0, 2.0, 6.0).unwrap(), 1.0);
        assert_eq!(normalize_energy(4.0, 2.0, 6.0).unwrap(), 0.5);
        assert!(normalize_energy(1.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn spectrum_single() {
        let mut q = QuboModel::new(1);
        q.add(0, 0, 5.0).unwrap();
        let s = brute_spectrum(&q).unwrap();
        assert_eq!((s.min, s.max), (0.0, 5.0));
    }
}
