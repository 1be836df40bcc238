use crate::manifest::Manifest;
use crate::{invalid, CliError, Command, Encoding, EncodingArgs, Strategy};
use anyhow::Context;
use midselect::builders::{binary_bound_filter, BoundCheck, FilterVariant};
use midselect::experiments::{
    run_delta_e, run_optimization, sample_angles, summarize_delta_e, summarize_optimization, write_csv, ExperimentError,
    ExperimentPlan, Scenario,
};
use midselect::qaoa::{assemble, evaluate, LbfgsbOptions, TspProblem};
use midselect::qubo::{brute_spectrum, reduced_tsp_qubo, tsp_qubo};
use midselect::{resources, transpile, Circuit, EncodingSpec, McxStrategy, NoiseFamily, NoiseModel, TspInstance};
use std::fs;
use std::path::{Path, PathBuf};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Result<()> {
    match &command {
        Command::Build(a) => build(&command, a),
        Command::VerifyEncoding(a) => verify(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Simulate(a) => simulate(&command, a),
        Command::DeltaE(a) => delta_e(&command, a),
        Command::OptimizeExp(a) => optimize_exp(&command, a),
        Command::Replay(a) => {
            let m = Manifest::read(&a.manifest).map_err(invalid)?;
            let mut cmd = m.command;
            if let Some(out) = &a.out {
                redirect(&mut cmd, out.clone())?;
            }
            run(cmd)
        }
    }
}

fn redirect(cmd: &mut Command, out: PathBuf) -> Result<()> {
    match cmd {
        Command::Build(a) => a.out = out,
        Command::Simulate(a) => a.out = out,
        Command::DeltaE(a) => a.study.out = out,
        Command::OptimizeExp(a) => a.study.out = out,
        _ => return Err(invalid("the recorded command writes no outputs")),
    }
    Ok(())
}

fn need<T: Copy>(v: Option<T>, flag: &str, enc: Encoding) -> Result<T> {
    v.ok_or_else(|| invalid(format!("--{flag} is required for {enc:?} encodings").to_lowercase()))
}

fn encoding_spec(a: &EncodingArgs) -> Result<EncodingSpec> {
    let e = a.encoding;
    let spec = match e {
        Encoding::Khot => EncodingSpec::KHot { n: need(a.n, "n", e)?, k: need(a.k, "k", e)? },
        Encoding::Onehot => EncodingSpec::OneHot { n: need(a.n, "n", e)? },
        Encoding::Wall => EncodingSpec::DomainWall { n: need(a.n, "n", e)? },
        Encoding::Binary => EncodingSpec::BinaryBound { n: need(a.n, "n", e)?, mu: need(a.mu, "mu", e)? },
        Encoding::Gray => EncodingSpec::GrayBound { n: need(a.n, "n", e)?, mu: need(a.mu, "mu", e)? },
        Encoding::Mixed => EncodingSpec::Mixed { l: need(a.l, "l", e)?, m: need(a.m, "m", e)?, mu_last: a.mu_last },
    };
    spec.validate().map_err(invalid)?;
    Ok(spec)
}

fn variant(spec: &EncodingSpec, a: &EncodingArgs) -> Result<FilterVariant> {
    let v = match &a.variant {
        Some(s) => s.parse().map_err(invalid)?,
        None => spec.default_variant(),
    };
    if !spec.variants().contains(&v) {
        return Err(invalid(format!("variant {v:?} does not apply to {}; choose from {:?}", spec.name(), spec.variants())));
    }
    Ok(v)
}

fn strategy(s: Strategy) -> McxStrategy {
    match s {
        Strategy::Free => McxStrategy::AncillaFree,
        Strategy::Anc => McxStrategy::BorrowedAncilla,
        Strategy::MultiAnc => McxStrategy::DedicatedAncilla,
    }
}

fn out_dir(file: &Path) -> &Path {
    file.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

fn write(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn build(cmd: &Command, a: &crate::BuildArgs) -> Result<()> {
    let spec = encoding_spec(&a.encoding)?;
    let mut circuit = match (a.partial_checks, spec) {
        (Some(c), EncodingSpec::BinaryBound { n, mu }) => binary_bound_filter(n, mu, BoundCheck::Partial(c)).map_err(invalid)?,
        (Some(_), _) => return Err(invalid("--partial-checks applies to binary encodings only")),
        (None, _) => spec.filter(variant(&spec, &a.encoding)?).map_err(invalid)?,
    };
    if let Some(s) = a.transpile {
        circuit = transpile(&circuit, strategy(s)).context("transpiling")?;
    }
    write(&a.out, &circuit.to_json())?;
    Manifest::new(cmd, &[&a.out]).write(out_dir(&a.out))?;
    let r = resources(&circuit);
    println!(
        "{}: {} qubits, {} ancilla, {} gates, depth {}",
        a.out.display(),
        circuit.n_qubits(),
        r.ancilla,
        r.gates,
        r.depth
    );
    Ok(())
}

fn verify(a: &crate::VerifyArgs) -> Result<()> {
    let spec = encoding_spec(&a.encoding)?;
    if spec.data_width() > 12 {
        return Err(invalid(format!("exhaustive check limited to 12 data wires, got {}", spec.data_width())));
    }
    let circuit = match &a.circuit {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            Circuit::from_json(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?
        }
        None => spec.filter(variant(&spec, &a.encoding)?).map_err(invalid)?,
    };
    let report = midselect::builders::verify_filter(&spec, &circuit, 1e-9).context("running the oracle")?;
    let n = spec.data_width();
    let valid = (0..1u64 << n).filter(|&x| spec.is_valid(x)).count();
    let bad_valid = report.failures.iter().filter(|&&x| spec.is_valid(x)).count();
    let bad_invalid = report.failures.len() - bad_valid;
    println!("{}/{} basis checks passed", valid - bad_valid, valid);
    println!("{}/{} invalid states rejected", report.checked - valid - bad_invalid, report.checked - valid);
    if report.all_passed() {
        return Ok(());
    }
    for x in report.failures.iter().take(10) {
        let kind = if spec.is_valid(*x) { "valid state not kept" } else { "invalid state accepted" };
        println!("counterexample {x:0n$b}: {kind}");
    }
    Err(anyhow::anyhow!("{} of {} basis states misclassified", report.failures.len(), report.checked).into())
}

fn load_instance(path: &Path) -> Result<TspInstance> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    TspInstance::from_json(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn spectrum(a: &crate::SpectrumArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let vars = if a.reduced { (inst.n - 1).pow(2) } else { inst.n.pow(2) };
    if vars > a.max_vars {
        return Err(invalid(format!("{vars} variables exceed --max-vars {}", a.max_vars)));
    }
    let model = if a.reduced { reduced_tsp_qubo(&inst) } else { tsp_qubo(&inst) }.map_err(invalid)?;
    let spec = brute_spectrum(&model).context("enumerating")?;
    println!("E_min {}", spec.min);
    println!("E_max {}", spec.max);
    let argmin: Vec<String> = spec.argmin.iter().map(|x| format!("{x:0vars$b}")).collect();
    println!("argmin {}", argmin.join(" "));
    Ok(())
}

fn noise(family: &str, gamma: f64) -> Result<NoiseModel> {
    let f: NoiseFamily = family.parse().map_err(invalid)?;
    NoiseModel::new(f, gamma).map_err(invalid)
}

fn guard(qubits: usize, max: usize) -> Result<()> {
    if qubits > max {
        return Err(invalid(format!("{qubits} qubits exceed the size guard of {max} (raise it with --max-qubits)")));
    }
    Ok(())
}

fn simulate(cmd: &Command, a: &crate::SimulateArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let noise = noise(&a.noise, a.gamma)?;
    let problem = TspProblem::new(&inst).map_err(invalid)?;
    let angles = match &a.angles {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<Vec<f64>>(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?
        }
        None => sample_angles(a.seed, 0, a.layers),
    };
    let cfg = problem.config(a.layers, angles).with_postselect(a.postselect_every);
    cfg.validate().map_err(invalid)?;
    let qubits = assemble(&cfg, &problem.separator).map_err(invalid)?.n_qubits();
    guard(qubits, a.guard.max_qubits)?;
    let result = evaluate(&cfg, &problem, &noise, !a.no_final_postselect).context("simulating")?;
    write(&a.out, &(serde_json::to_string_pretty(&result).context("serializing")? + "\n"))?;
    Manifest::new(cmd, &[&a.out]).write(out_dir(&a.out))?;
    println!("energy {:.6} acceptance {:.6} mid_acceptance {:.6}", result.energy, result.acceptance, result.mid_acceptance);
    Ok(())
}

fn workers(flag: Option<usize>) -> Result<usize> {
    if let Some(w) = flag {
        return if w == 0 { Err(invalid("--workers must be positive")) } else { Ok(w) };
    }
    match std::env::var("MIDSELECT_WORKERS") {
        Ok(v) => v.trim().parse().ok().filter(|&w| w > 0).ok_or_else(|| invalid(format!("MIDSELECT_WORKERS={v} is not a positive integer"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn parse_layers(s: &str) -> Result<Vec<usize>> {
    let bad = || invalid(format!("--layers `{s}`: expected `a..b` or a comma list"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        return if a <= b { Ok((a..=b).collect()) } else { Err(bad()) };
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

/// Plan problems are the caller's fault; everything else is a runtime failure.
fn classify(e: ExperimentError) -> CliError {
    match e {
        ExperimentError::Plan(m) => CliError::Invalid(m),
        other => CliError::Runtime(other.into()),
    }
}

fn csv_file(path: &Path, records: &[impl serde::Serialize]) -> Result<()> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_csv(records, std::io::BufWriter::new(f)).map_err(classify)
}

fn delta_e(cmd: &Command, a: &crate::DeltaEArgs) -> Result<()> {
    let s = &a.study;
    let workers = workers(s.workers)?;
    let (cities, instances, layers, families) = if a.full {
        (4, 100, (1..=40).collect(), vec!["depol", "ampdamp", "randx"])
    } else {
        (s.cities, s.instances, parse_layers(&a.layers)?, vec![s.noise.as_str()])
    };
    guard((cities.max(1) - 1).pow(2), s.guard.max_qubits)?;
    let plans = families
        .iter()
        .map(|f| {
            let plan = ExperimentPlan::delta_e(cities, instances, layers.clone(), noise(f, s.gamma)?, s.stride, s.seed);
            plan.validate().map_err(classify)?;
            Ok((f.to_string(), plan))
        })
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&s.out).with_context(|| format!("creating {}", s.out.display()))?;
    let mut outputs = Vec::new();
    for (family, plan) in &plans {
        let records = run_delta_e(plan, workers).map_err(classify)?;
        let suffix = if a.full { format!("_{family}") } else { String::new() };
        let csv = s.out.join(format!("delta_e{suffix}.csv"));
        let summary_path = s.out.join(format!("summary{suffix}.json"));
        csv_file(&csv, &records)?;
        let summary = summarize_delta_e(&records);
        write(&summary_path, &(serde_json::to_string_pretty(&summary).context("serializing")? + "\n"))?;
        println!(
            "{family}: mean ΔE {:+.5} (sd {:.5}, n {}), {} positive / {} negative, sign-test p {:.4}",
            summary.overall.mean,
            summary.overall.std,
            summary.overall.n,
            summary.sign_test.positive,
            summary.sign_test.negative,
            summary.sign_test.p_value
        );
        outputs.push(csv);
        outputs.push(summary_path);
    }
    let refs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    Manifest::new(cmd, &refs).write(&s.out)?;
    Ok(())
}

fn optimize_exp(cmd: &Command, a: &crate::OptimizeArgs) -> Result<()> {
    let s = &a.study;
    let workers = workers(s.workers)?;
    let scenario: Scenario = a.scenario.parse().map_err(invalid)?;
    if scenario == Scenario::DeltaE {
        return Err(invalid("use the delta-e subcommand for the random-angle study"));
    }
    guard((s.cities.max(1) - 1).pow(2), s.guard.max_qubits)?;
    let mut plan = ExperimentPlan::optimization(scenario, s.cities, s.instances, a.layers, noise(&s.noise, s.gamma)?, s.stride, s.seed);
    plan.optimizer = LbfgsbOptions { max_iter: a.max_iter, ..Default::default() };
    plan.validate().map_err(classify)?;
    fs::create_dir_all(&s.out).with_context(|| format!("creating {}", s.out.display()))?;
    let records = run_optimization(&plan, workers).map_err(classify)?;
    let csv = s.out.join(format!("optimization_{}.csv", scenario.short_name()));
    let summary_path = s.out.join(format!("summary_{}.json", scenario.short_name()));
    csv_file(&csv, &records)?;
    let summary = summarize_optimization(&records);
    write(&summary_path, &(serde_json::to_string_pretty(&summary).context("serializing")? + "\n"))?;
    Manifest::new(cmd, &[&csv, &summary_path]).write(&s.out)?;
    println!(
        "{}: mean relative improvement {:.4} (sd {:.4}, n {}), mean E_with/E_plain {:.4}",
        summary.scenario, summary.rel_improvement.mean, summary.rel_improvement.std, summary.rel_improvement.n, summary.ratio.mean
    );
    Ok(())
}
