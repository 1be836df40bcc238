//! Seeded campaigns comparing final-only post-selection against mid-circuit
//! plus final post-selection on random TSP instances.
//!
//! Every random draw comes from a ChaCha8 stream keyed by (seed, instance,
//! purpose), so output does not depend on scheduling. Records are sorted
//! before they are returned.

use crate::qaoa::{evaluate, optimize, LbfgsbOptions, Mode, QaoaError, TspProblem};
use crate::qubo::TspInstance;
use crate::sim::{NoiseFamily, NoiseModel, SimError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};
use std::f64::consts::TAU;
use std::io::Write;
use std::ops::RangeInclusive;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error(transparent)]
    Qaoa(#[from] QaoaError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    DeltaE,
    /// Optimize without mid-circuit post-selection, then inject it.
    InjectAfter,
    /// Optimize with and without it from the same initial angles.
    CoOptimize,
    /// Optimize without it, then re-optimize with it from those angles.
    ReOptimize,
}

impl Scenario {
    pub fn short_name(self) -> &'static str {
        match self {
            Scenario::DeltaE => "delta_e",
            Scenario::InjectAfter => "inject",
            Scenario::CoOptimize => "co",
            Scenario::ReOptimize => "re",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "delta_e" | "delta-e" => Ok(Scenario::DeltaE),
            "inject" | "inject_after" => Ok(Scenario::InjectAfter),
            "co" | "co_optimize" => Ok(Scenario::CoOptimize),
            "re" | "re_optimize" => Ok(Scenario::ReOptimize),
            _ => Err(format!("unknown scenario '{s}' (expected inject, co or re)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub cities: usize,
    pub instances: usize,
    pub layers: Vec<usize>,
    pub noise: NoiseFamily,
    pub gamma: f64,
    pub stride: usize,
    pub seed: u64,
    pub scenario: Scenario,
    /// Inclusive range of off-diagonal travel costs.
    #[serde(default = "default_cost_range")]
    pub cost_range: (i64, i64),
    #[serde(default)]
    pub optimizer: LbfgsbOptions,
}

fn default_cost_range() -> (i64, i64) {
    (1, 9)
}

impl ExperimentPlan {
    pub fn delta_e(cities: usize, instances: usize, layers: Vec<usize>, noise: NoiseModel, stride: usize, seed: u64) -> Self {
        Self {
            cities,
            instances,
            layers,
            noise: noise.family(),
            gamma: noise.gamma(),
            stride,
            seed,
            scenario: Scenario::DeltaE,
            cost_range: default_cost_range(),
            optimizer: LbfgsbOptions::default(),
        }
    }

    pub fn optimization(
        scenario: Scenario,
        cities: usize,
        instances: usize,
        layers: usize,
        noise: NoiseModel,
        stride: usize,
        seed: u64,
    ) -> Self {
        Self { scenario, layers: vec![layers], ..Self::delta_e(cities, instances, vec![], noise, stride, seed) }
    }

    pub fn noise_model(&self) -> Result<NoiseModel, ExperimentError> {
        NoiseModel::new(self.noise, self.gamma).map_err(|e| ExperimentError::Plan(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Plan(m.into()));
        if self.cities < 3 {
            return bad("need at least 3 cities");
        }
        if self.instances == 0 {
            return bad("need at least one instance");
        }
        if self.layers.is_empty() || self.layers.contains(&0) {
            return bad("layer counts must be positive");
        }
        if self.stride == 0 {
            return bad("stride must be positive");
        }
        if self.cost_range.0 > self.cost_range.1 {
            return bad("empty cost range");
        }
        if self.scenario != Scenario::DeltaE && self.layers.len() != 1 {
            return bad("optimization scenarios take a single layer count");
        }
        self.noise_model()?;
        Ok(())
    }
}

/// Purpose tags separating the random streams of one instance.
const STREAM_COSTS: u64 = 0;
const STREAM_ANGLES: u64 = 1;

fn stream(seed: u64, instance: usize, tag: u64, layers: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((instance as u64) << 32) | (tag << 16) | layers as u64);
    rng
}

/// Random instance: off-diagonal costs i.i.d. uniform over `cost_range`,
/// zero diagonal, default penalty.
pub fn sample_instance(seed: u64, index: usize, n: usize, cost_range: RangeInclusive<i64>) -> Result<TspInstance, ExperimentError> {
    if n < 2 || cost_range.is_empty() {
        return Err(ExperimentError::Plan(format!("cannot sample N = {n} over {cost_range:?}")));
    }
    let mut rng = stream(seed, index, STREAM_COSTS, 0);
    let w = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0 } else { rng.random_range(cost_range.clone()) }).collect())
        .collect();
    TspInstance::new(w).map_err(|e| ExperimentError::Plan(e.to_string()))
}

/// Uniform angles over [0, 2π)^{2l}.
pub fn sample_angles(seed: u64, index: usize, layers: usize) -> Vec<f64> {
    let mut rng = stream(seed, index, STREAM_ANGLES, layers);
    (0..2 * layers).map(|_| rng.random_range(0.0..TAU)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaERecord {
    pub instance: usize,
    pub seed: u64,
    pub layers: usize,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "E_no_mid")]
    pub e_no_mid: f64,
    #[serde(rename = "E_mid")]
    pub e_mid: f64,
    #[serde(rename = "delta_E")]
    pub delta_e: f64,
    pub acc_mid: f64,
    pub acc_final: f64,
}

impl DeltaERecord {
    /// Rows whose mid-circuit branch was rejected carry acceptance 0.
    pub fn rejected(&self) -> bool {
        self.acc_mid == 0.0
    }
}

fn is_rejection(e: &QaoaError) -> bool {
    matches!(e, QaoaError::Sim(SimError::Rejected(_)))
}

fn with_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    Ok(pool.install(job))
}

fn problems(plan: &ExperimentPlan) -> Result<Vec<TspProblem>, ExperimentError> {
    let range = plan.cost_range.0..=plan.cost_range.1;
    (0..plan.instances)
        .map(|i| Ok(TspProblem::new(&sample_instance(plan.seed, i, plan.cities, range.clone())?)?))
        .collect()
}

fn delta_e_one(plan: &ExperimentPlan, noise: &NoiseModel, index: usize, problem: &TspProblem, layers: usize) -> Result<DeltaERecord, QaoaError> {
    let cfg = problem.config(layers, sample_angles(plan.seed, index, layers));
    let ideal = evaluate(&cfg, problem, &NoiseModel::none(), true)?;
    let plain = evaluate(&cfg, problem, noise, true)?;
    let mid_cfg = cfg.clone().with_postselect(Some(plan.stride));
    let (e_mid, acc_mid, acc_final) = match evaluate(&mid_cfg, problem, noise, true) {
        Ok(r) => (r.energy, r.mid_acceptance, r.acceptance),
        Err(e) if is_rejection(&e) => (f64::NAN, 0.0, 0.0),
        Err(e) => return Err(e),
    };
    Ok(DeltaERecord {
        instance: index,
        seed: plan.seed,
        layers,
        e: ideal.energy,
        e_no_mid: plain.energy,
        e_mid,
        delta_e: (ideal.energy - plain.energy).abs() - (ideal.energy - e_mid).abs(),
        acc_mid,
        acc_final,
    })
}

/// For every instance and layer count: one uniform random angle vector,
/// the noiseless energy E, the noisy energy with final post-selection only,
/// and the noisy energy with post-selection every `stride` layers as well.
pub fn run_delta_e(plan: &ExperimentPlan, workers: usize) -> Result<Vec<DeltaERecord>, ExperimentError> {
    plan.validate()?;
    if plan.scenario != Scenario::DeltaE {
        return Err(ExperimentError::Plan("run_delta_e needs the delta_e scenario".into()));
    }
    let noise = plan.noise_model()?;
    let problems = problems(plan)?;
    let jobs: Vec<(usize, usize)> =
        (0..plan.instances).flat_map(|i| plan.layers.iter().map(move |&l| (i, l))).collect();
    let mut records = with_pool(workers, || {
        jobs.par_iter()
            .map(|&(i, l)| delta_e_one(plan, &noise, i, &problems[i], l))
            .collect::<Result<Vec<_>, _>>()
    })??;
    records.sort_by_key(|r| (r.instance, r.layers));
    Ok(records)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationRecord {
    pub instance: usize,
    pub seed: u64,
    pub scenario: String,
    #[serde(rename = "E_plain")]
    pub e_plain: f64,
    #[serde(rename = "E_with")]
    pub e_with: f64,
    /// 1 − |E_ideal − E_with| / |E_ideal − E_plain|, each ideal energy taken
    /// noiselessly at the same angles as its noisy counterpart.
    pub rel_improvement: f64,
    pub iters_plain: usize,
    pub iters_with: usize,
    #[serde(rename = "E_ideal_plain")]
    pub e_ideal_plain: f64,
    #[serde(rename = "E_ideal_with")]
    pub e_ideal_with: f64,
    /// E_with / E_plain.
    pub ratio: f64,
}

fn relative_improvement(ideal_plain: f64, plain: f64, ideal_with: f64, with: f64) -> f64 {
    let base = (ideal_plain - plain).abs();
    let err = (ideal_with - with).abs();
    if base == 0.0 {
        if err == 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - err / base
    }
}

/// Optimizes the plain circuit once, then derives one record per scenario.
fn optimization_one(
    plan: &ExperimentPlan,
    noise: &NoiseModel,
    index: usize,
    problem: &TspProblem,
    scenarios: &[Scenario],
) -> Result<Vec<OptimizationRecord>, QaoaError> {
    let layers = plan.layers[0];
    let every = plan.stride;
    let cfg = problem.config(layers, sample_angles(plan.seed, index, layers));
    let opts = &plan.optimizer;
    let ideal = NoiseModel::none();
    let plain = optimize(&cfg, problem, noise, Mode::Plain, opts)?;
    let plain_cfg = problem.config(layers, plain.x.clone());
    let e_plain = evaluate(&plain_cfg, problem, noise, true)?.energy;
    let e_ideal_plain = evaluate(&plain_cfg, problem, &ideal, true)?.energy;
    scenarios
        .iter()
        .map(|&scenario| {
            let (with_angles, iters_with) = match scenario {
                Scenario::InjectAfter => (plain.x.clone(), 0),
                Scenario::CoOptimize => {
                    let r = optimize(&cfg, problem, noise, Mode::WithMid { every }, opts)?;
                    (r.x, r.iterations)
                }
                Scenario::ReOptimize => {
                    let r = optimize(&plain_cfg, problem, noise, Mode::WithMid { every }, opts)?;
                    (r.x, r.iterations)
                }
                Scenario::DeltaE => unreachable!("validated by the caller"),
            };
            let with_cfg = problem.config(layers, with_angles).with_postselect(Some(every));
            let e_with = evaluate(&with_cfg, problem, noise, true)?.energy;
            let e_ideal_with = evaluate(&with_cfg, problem, &ideal, true)?.energy;
            Ok(OptimizationRecord {
                instance: index,
                seed: plan.seed,
                scenario: scenario.short_name().into(),
                e_plain,
                e_with,
                rel_improvement: relative_improvement(e_ideal_plain, e_plain, e_ideal_with, e_with),
                iters_plain: plain.iterations,
                iters_with,
                e_ideal_plain,
                e_ideal_with,
                ratio: e_with / e_plain,
            })
        })
        .collect()
}

/// Runs the plan's optimization scenario on every instance.
pub fn run_optimization(plan: &ExperimentPlan, workers: usize) -> Result<Vec<OptimizationRecord>, ExperimentError> {
    Ok(run_optimization_scenarios(plan, &[plan.scenario], workers)?.remove(0))
}

/// Runs several optimization scenarios, sharing the plain optimization of
/// each instance between them. The plan's own scenario field is ignored.
/// Returns one record list per requested scenario, in request order.
pub fn run_optimization_scenarios(
    plan: &ExperimentPlan,
    scenarios: &[Scenario],
    workers: usize,
) -> Result<Vec<Vec<OptimizationRecord>>, ExperimentError> {
    if scenarios.is_empty() || scenarios.contains(&Scenario::DeltaE) {
        return Err(ExperimentError::Plan("need one or more optimization scenarios".into()));
    }
    ExperimentPlan { scenario: scenarios[0], ..plan.clone() }.validate()?;
    let noise = plan.noise_model()?;
    let problems = problems(plan)?;
    let per_instance = with_pool(workers, || {
        (0..plan.instances)
            .into_par_iter()
            .map(|i| optimization_one(plan, &noise, i, &problems[i], scenarios))
            .collect::<Result<Vec<_>, _>>()
    })??;
    let mut out: Vec<Vec<OptimizationRecord>> = vec![Vec::with_capacity(plan.instances); scenarios.len()];
    for records in per_instance {
        for (k, r) in records.into_iter().enumerate() {
            out[k].push(r);
        }
    }
    for list in &mut out {
        list.sort_by_key(|r| r.instance);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for n < 2.
    pub std: f64,
    pub n: usize,
}

/// Mean and standard deviation over the finite values.
pub fn stats(values: impl IntoIterator<Item = f64>) -> Stats {
    let v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    let n = v.len();
    if n == 0 {
        return Stats { mean: f64::NAN, std: f64::NAN, n };
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    let std = if n < 2 { 0.0 } else { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() };
    Stats { mean, std, n }
}

/// One-sided sign test of "median > 0": P(Bin(m, ½) ≥ positives), where m
/// counts the nonzero values. Values with |x| ≤ `tie` count as zero.
pub fn sign_test(values: &[f64], tie: f64) -> SignTest {
    let positive = values.iter().filter(|x| **x > tie).count();
    let negative = values.iter().filter(|x| **x < -tie).count();
    let m = positive + negative;
    let p_value = if positive == 0 {
        1.0
    } else {
        let b = Binomial::new(0.5, m as u64).expect("p = 0.5 is valid");
        b.sf(positive as u64 - 1)
    };
    SignTest { positive, negative, p_value }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignTest {
    pub positive: usize,
    pub negative: usize,
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub layers: usize,
    #[serde(flatten)]
    pub delta_e: Stats,
    /// Rows dropped because the mid-circuit branch was rejected.
    pub excluded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaESummary {
    pub buckets: Vec<LayerSummary>,
    pub overall: Stats,
    pub sign_test: SignTest,
    pub excluded: usize,
}

const SIGN_TIE: f64 = 1e-12;

pub fn summarize_delta_e(records: &[DeltaERecord]) -> DeltaESummary {
    let mut layers: Vec<usize> = records.iter().map(|r| r.layers).collect();
    layers.sort_unstable();
    layers.dedup();
    let buckets = layers
        .iter()
        .map(|&l| {
            let rows: Vec<&DeltaERecord> = records.iter().filter(|r| r.layers == l).collect();
            LayerSummary {
                layers: l,
                delta_e: stats(rows.iter().filter(|r| !r.rejected()).map(|r| r.delta_e)),
                excluded: rows.iter().filter(|r| r.rejected()).count(),
            }
        })
        .collect();
    let kept: Vec<f64> = records.iter().filter(|r| !r.rejected()).map(|r| r.delta_e).collect();
    DeltaESummary {
        buckets,
        overall: stats(kept.iter().copied()),
        sign_test: sign_test(&kept, SIGN_TIE),
        excluded: records.len() - kept.len(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationSummary {
    pub scenario: String,
    pub rel_improvement: Stats,
    pub ratio: Stats,
    pub e_plain: Stats,
    pub e_with: Stats,
}

pub fn summarize_optimization(records: &[OptimizationRecord]) -> OptimizationSummary {
    OptimizationSummary {
        scenario: records.first().map_or_else(String::new, |r| r.scenario.clone()),
        rel_improvement: stats(records.iter().map(|r| r.rel_improvement)),
        ratio: stats(records.iter().map(|r| r.ratio)),
        e_plain: stats(records.iter().map(|r| r.e_plain)),
        e_with: stats(records.iter().map(|r| r.e_with)),
    }
}

/// Paired differences a_i − b_i of matching instances.
pub fn paired_differences(a: &[OptimizationRecord], b: &[OptimizationRecord]) -> Vec<f64> {
    a.iter()
        .filter_map(|ra| b.iter().find(|rb| rb.instance == ra.instance).map(|rb| ra.rel_improvement - rb.rel_improvement))
        .collect()
}

/// Serializes records as CSV with a header row.
pub fn write_csv<T: Serialize, W: Write>(records: &[T], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string<T: Serialize>(records: &[T]) -> Result<String, ExperimentError> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}
