//! Shared fixtures for the simulation benchmarks.

use midselect::builders::onehot_postselect;
use midselect::qaoa::{assemble, TspProblem};
use midselect::qubo::TspInstance;
use midselect::{transpile, Circuit, McxStrategy};

/// A fixed 3-city instance.
pub fn small_instance() -> TspInstance {
    TspInstance::new(vec![vec![0, 3, 7], vec![2, 0, 5], vec![9, 4, 0]]).expect("square matrix")
}

/// A fixed 4-city instance.
pub fn medium_instance() -> TspInstance {
    TspInstance::new(vec![vec![0, 3, 7, 1], vec![2, 0, 5, 8], vec![9, 4, 0, 6], vec![5, 2, 3, 0]]).expect("square matrix")
}

/// Transpiled ansatz with `layers` layers and post-selection every `every`.
pub fn qaoa_circuit(inst: &TspInstance, layers: usize, every: Option<usize>) -> Circuit {
    let problem = TspProblem::new(inst).expect("valid instance");
    let angles = (0..2 * layers).map(|i| 0.1 + 0.37 * i as f64).collect();
    let cfg = problem.config(layers, angles).with_postselect(every);
    let c = assemble(&cfg, &problem.separator).expect("consistent config");
    transpile(&c, McxStrategy::AncillaFree).expect("lowerable")
}

/// Transpiled one-hot post-selection on `n` wires.
pub fn onehot_circuit(n: usize) -> Circuit {
    transpile(&onehot_postselect(n).expect("n ≥ 2"), McxStrategy::AncillaFree).expect("lowerable")
}
