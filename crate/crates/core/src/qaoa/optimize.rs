//! Bound-constrained quasi-Newton minimization with finite-difference
//! gradients.

use super::{evaluate, AnsatzConfig, QaoaError, TspProblem};
use crate::sim::NoiseModel;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::f64::consts::TAU;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LbfgsbOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the relative decrease of f falls below this.
    pub ftol: f64,
    /// Stop when the projected gradient's max-norm falls below this.
    pub pgtol: f64,
    pub fd_step: f64,
}

impl Default for LbfgsbOptions {
    fn default() -> Self {
        Self { memory: 10, max_iter: 200, ftol: 1e-8, pgtol: 1e-5, fd_step: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub x: Vec<f64>,
    pub f: f64,
    /// Objective after every accepted iteration, starting with f(x0).
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Objective<'a, E> {
    f: &'a mut dyn FnMut(&[f64]) -> Result<f64, E>,
    evals: usize,
}

impl<E> Objective<'_, E> {
    fn value(&mut self, x: &[f64]) -> Result<f64, E> {
        self.evals += 1;
        (self.f)(x)
    }

    /// Central differences, one-sided where a bound is closer than the step.
    fn gradient(&mut self, x: &[f64], lo: &[f64], hi: &[f64], fx: f64, h: f64) -> Result<Vec<f64>, E> {
        let mut g = vec![0.0; x.len()];
        let mut xp = x.to_vec();
        for i in 0..x.len() {
            let up = (x[i] + h).min(hi[i]);
            let down = (x[i] - h).max(lo[i]);
            let (fu, fd) = match (up > x[i], down < x[i]) {
                (true, true) => {
                    xp[i] = up;
                    let fu = self.value(&xp)?;
                    xp[i] = down;
                    (fu, self.value(&xp)?)
                }
                (true, false) => {
                    xp[i] = up;
                    (self.value(&xp)?, fx)
                }
                (false, true) => {
                    xp[i] = down;
                    (fx, self.value(&xp)?)
                }
                (false, false) => (fx, fx),
            };
            xp[i] = x[i];
            let span = up - down;
            g[i] = if span > 0.0 { (fu - fd) / span } else { 0.0 };
        }
        Ok(g)
    }
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Components whose descent direction points out of the box.
fn active(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> Vec<bool> {
    (0..x.len()).map(|i| (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)).collect()
}

/// Projected L-BFGS on the box [lo, hi] with Armijo backtracking along the
/// projected path.
pub fn lbfgsb<E>(
    f: &mut dyn FnMut(&[f64]) -> Result<f64, E>,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &LbfgsbOptions,
) -> Result<OptResult, E> {
    let mut obj = Objective { f, evals: 0 };
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let mut fx = obj.value(&x)?;
    let mut g = obj.gradient(&x, lo, hi, fx, opts.fd_step)?;
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut trace = vec![fx];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let act = active(&x, &g, lo, hi);
        let pg: Vec<f64> = g.iter().zip(&act).map(|(gi, &a)| if a { 0.0 } else { *gi }).collect();
        if pg.iter().fold(0.0f64, |m, v| m.max(v.abs())) < opts.pgtol {
            converged = true;
            break;
        }
        // two-loop recursion on the free subspace
        let mut q = pg.clone();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * dot(s, &q);
            for i in 0..q.len() {
                q[i] -= a * y[i];
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = mem.back() {
            let scale = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= scale);
        }
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for i in 0..q.len() {
                q[i] += (a - b) * s[i];
            }
        }
        let mut d: Vec<f64> = q.iter().zip(&act).map(|(v, &a)| if a { 0.0 } else { -v }).collect();
        if dot(&d, &g) >= 0.0 {
            mem.clear();
            d = pg.iter().map(|v| -v).collect();
        }
        let mut step = if mem.is_empty() { 1.0 / d.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0) } else { 1.0 };

        let mut accepted = None;
        for _ in 0..40 {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            project(&mut xn, lo, hi);
            let moved: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease = dot(&g, &moved);
            if decrease >= 0.0 {
                step *= 0.5;
                continue;
            }
            let fn_ = obj.value(&xn)?;
            if fn_ <= fx + 1e-4 * decrease {
                accepted = Some((xn, fn_, moved));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, s)) = accepted else {
            if mem.is_empty() {
                break;
            }
            mem.clear();
            continue;
        };
        let gn = obj.gradient(&xn, lo, hi, fn_, opts.fd_step)?;
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if mem.len() == opts.memory {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        let rel = (fx - fn_) / fx.abs().max(fn_.abs()).max(1.0);
        x = xn;
        g = gn;
        fx = fn_;
        iterations += 1;
        trace.push(fx);
        if rel <= opts.ftol {
            converged = true;
            break;
        }
    }
    Ok(OptResult { x, f: fx, trace, iterations, evaluations: obj.evals, converged })
}

/// Whether mid-circuit post-selection is part of the optimized circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Plain,
    WithMid { every: usize },
}

/// Minimizes the final-post-selected normalized energy over angles in
/// [0, 2π]^{2l}, starting from `config.angles`.
pub fn optimize(
    config: &AnsatzConfig,
    problem: &TspProblem,
    noise: &NoiseModel,
    mode: Mode,
    opts: &LbfgsbOptions,
) -> Result<OptResult, QaoaError> {
    let mut cfg = config.clone();
    cfg.postselect_every = match mode {
        Mode::Plain => None,
        Mode::WithMid { every } => Some(every),
    };
    cfg.validate()?;
    let dim = cfg.angles.len();
    let lo = vec![0.0; dim];
    let hi = vec![TAU; dim];
    let x0 = cfg.angles.clone();
    let mut f = |x: &[f64]| -> Result<f64, QaoaError> {
        let mut c = cfg.clone();
        c.angles = x.to_vec();
        Ok(evaluate(&c, problem, noise, true)?.energy)
    };
    lbfgsb(&mut f, &x0, &lo, &hi, opts)
}
