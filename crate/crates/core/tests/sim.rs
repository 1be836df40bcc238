use midselect::builders::onehot_postselect;
use midselect::linalg::Mat2;
use midselect::sim::{run, run_from, DensityState, NoiseFamily, NoiseModel, SimError, Statevector, SubspaceSpec};
use midselect::{transpile, Circuit, Gate, Instruction, McxStrategy, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const FAMILIES: [NoiseFamily; 3] = [NoiseFamily::Depolarizing, NoiseFamily::AmplitudeDamping, NoiseFamily::RandomX];

fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Full-rank random state GG†/tr(GG†).
fn random_density(n: usize, rng: &mut ChaCha8Rng) -> DensityState {
    let d = 1usize << n;
    let g = DMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    let rho = rho / tr;
    DensityState::from_matrix(n, (0..d * d).map(|i| rho[(i / d, i % d)]).collect()).unwrap()
}

fn to_matrix(s: &DensityState) -> DMatrix<C64> {
    let d = s.dim();
    DMatrix::from_fn(d, d, |r, c| s.entry(r, c))
}

fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Embeds a 1-qubit operator on wire w of n.
fn embed(n: usize, w: usize, m: &Mat2) -> DMatrix<C64> {
    let d = 1usize << n;
    DMatrix::from_fn(d, d, |r, c| if (r ^ c) & !(1 << w) != 0 { C64::new(0.0, 0.0) } else { m.0[(r >> w) & 1][(c >> w) & 1] })
}

#[test]
fn kraus_sets_are_complete() {
    for f in FAMILIES {
        for g in [0.0, 0.002, 0.01, 0.3, 1.0] {
            let m = NoiseModel::new(f, g).unwrap();
            assert!(m.completeness_error() < 1e-12, "{f:?} {g}");
        }
    }
    assert!(NoiseModel::new(NoiseFamily::RandomX, 1.5).is_err());
    assert!(NoiseModel::new(NoiseFamily::Depolarizing, -0.1).is_err());
}

#[test]
fn full_depolarizing_gives_the_maximally_mixed_state() {
    let noise = NoiseModel::new(NoiseFamily::Depolarizing, 1.0).unwrap();
    let mut one = DensityState::basis(1, 1).unwrap();
    one.apply_gate(&Gate::h(0), &noise).unwrap();
    assert!(max_diff(&to_matrix(&one), &to_matrix(&DensityState::maximally_mixed(1))) < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut two = random_density(2, &mut rng);
    two.apply_gate(&Gate::cnot(0, 1), &noise).unwrap();
    assert!(max_diff(&to_matrix(&two), &to_matrix(&DensityState::maximally_mixed(2))) < 1e-12);
}

#[test]
fn full_amplitude_damping_relaxes_to_ground() {
    let noise = NoiseModel::new(NoiseFamily::AmplitudeDamping, 1.0).unwrap();
    let mut s = DensityState::basis(1, 1).unwrap();
    s.apply_gate(&Gate::u1q(0, Mat2::identity()), &noise).unwrap();
    assert!(max_diff(&to_matrix(&s), &to_matrix(&DensityState::zero(1))) < 1e-12);
}

#[test]
fn random_x_flips_with_probability_gamma() {
    let noise = NoiseModel::new(NoiseFamily::RandomX, 0.25).unwrap();
    let mut s = DensityState::zero(2);
    s.apply_gate(&Gate::cnot(0, 1), &noise).unwrap();
    let p = s.probabilities();
    assert!((p[0] - 0.75 * 0.75).abs() < 1e-12);
    assert!((p[1] - 0.25 * 0.75).abs() < 1e-12);
    assert!((p[3] - 0.25 * 0.25).abs() < 1e-12);
}

#[test]
fn kernels_match_dense_linear_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 3;
    for trial in 0..20 {
        let s0 = random_density(n, &mut rng);
        let w = trial % n;
        let u = Mat2::ry(rng.random_range(-3.0..3.0)) * Mat2::rz(rng.random_range(-3.0..3.0));
        let mut s = s0.clone();
        s.apply_1q(w, &u).unwrap();
        let big = embed(n, w, &u);
        let want = &big * to_matrix(&s0) * big.adjoint();
        assert!(max_diff(&to_matrix(&s), &want) < 1e-12);

        for f in FAMILIES {
            let noise = NoiseModel::new(f, rng.random_range(0.0..1.0)).unwrap();
            let mut s = s0.clone();
            s.apply_kraus_1q(w, &noise.kraus_1q()).unwrap();
            let mut want = DMatrix::zeros(1 << n, 1 << n);
            for k in noise.kraus_1q() {
                let kk = embed(n, w, &k);
                want += &kk * to_matrix(&s0) * kk.adjoint();
            }
            assert!(max_diff(&to_matrix(&s), &want) < 1e-12, "{f:?}");
        }
    }
}

#[test]
fn trace_is_preserved_over_a_thousand_noisy_gates() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 4;
    let mut s = random_density(n, &mut rng);
    for step in 0..1000 {
        let noise = NoiseModel::new(FAMILIES[step % 3], rng.random_range(0.0..0.2)).unwrap();
        let a = rng.random_range(0..n);
        let g = if rng.random_bool(0.5) {
            Gate::u1q(a, Mat2::ry(rng.random_range(-3.0..3.0)) * Mat2::rz(rng.random_range(-3.0..3.0)))
        } else {
            let b = (a + rng.random_range(1..n)) % n;
            Gate::cnot(a, b)
        };
        s.apply_gate(&g, &noise).unwrap();
    }
    assert!((s.trace() - 1.0).abs() < 1e-10);
    assert!(s.hermiticity_error() < 1e-10);
    assert!(s.probabilities().iter().all(|&p| p > -1e-12));
}

fn projector_check(n: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = transpile(&onehot_postselect(n).unwrap(), McxStrategy::AncillaFree).unwrap();
    assert_eq!(c.n_qubits(), n);
    let s_set = SubspaceSpec::from_predicate(n, |z| z.count_ones() == 1).unwrap();
    for _ in 0..20 {
        let rho = random_density(n, &mut rng);
        let mut via_circuit = rho.clone();
        run_from(&mut via_circuit, &c, &NoiseModel::none()).unwrap();
        let mut via_projector = rho.clone();
        via_projector.classical_postselect(&s_set).unwrap();
        let err = max_diff(&to_matrix(&via_circuit), &to_matrix(&via_projector));
        assert!(err < 1e-9, "n={n}: {err}");
        assert!((via_circuit.acceptance() - via_projector.acceptance()).abs() < 1e-9);
    }
}

#[test]
fn onehot_postselection_is_the_subspace_projector() {
    projector_check(4, 100);
    projector_check(5, 101);
    projector_check(8, 102);
}

#[test]
fn postselection_rejects_impossible_branches() {
    let mut s = DensityState::basis(2, 1).unwrap();
    assert!(matches!(s.postselect_zero(&[0]), Err(SimError::Rejected(_))));
    let mut c = Circuit::new(1);
    c.gate(Gate::x(0)).unwrap();
    c.push(Instruction::PostSelectZero(vec![0])).unwrap();
    assert!(run(&c, &NoiseModel::none(), 0).is_err());
}

#[test]
fn untranspiled_gates_are_refused() {
    let mut c = Circuit::new(3);
    c.gate(Gate::toffoli(0, 1, 2)).unwrap();
    assert!(matches!(run(&c, &NoiseModel::none(), 0), Err(SimError::NotTranspiled(_))));
}

#[test]
fn reset_and_measurement_channels() {
    let mut s = DensityState::zero(2);
    s.apply_1q(0, &Mat2::h()).unwrap();
    s.apply_cnot(0, 1).unwrap();
    s.measure_z(0).unwrap();
    assert!(s.entry(0, 3).norm() < 1e-15);
    s.reset(1).unwrap();
    let p = s.probabilities();
    assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    assert!((s.trace() - 1.0).abs() < 1e-12);
}

#[test]
fn noiseless_density_matches_statevector() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 4;
    let mut c = Circuit::new(n);
    for _ in 0..30 {
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(1..n)) % n;
        c.gate(Gate::u1q(a, Mat2::ry(rng.random_range(-3.0..3.0)) * Mat2::rz(rng.random_range(-3.0..3.0)))).unwrap();
        c.gate(Gate::XxPlusYy { a, b, angle: rng.random_range(-1.0..1.0) }).unwrap();
    }
    let mut sv = Statevector::basis(n, 5).unwrap();
    sv.run(&c).unwrap();
    let low = transpile(&c, McxStrategy::AncillaFree).unwrap();
    let rho = run(&low, &NoiseModel::none(), 5).unwrap();
    let want = DensityState::from_statevector(n, sv.amplitudes()).unwrap();
    assert!(max_diff(&to_matrix(&rho), &to_matrix(&want)) < 1e-10);
}

#[test]
fn overlaps_partition_the_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let rho = random_density(3, &mut rng);
    let s = SubspaceSpec::from_predicate(3, |z| z.count_ones() == 1).unwrap();
    let mut ideal = vec![C64::new(0.0, 0.0); 8];
    ideal[2] = C64::new(1.0, 0.0);
    let (p1, p2, p3) = rho.subspace_overlaps(&ideal, &s).unwrap();
    assert!((p1 + p2 + p3 - 1.0).abs() < 1e-12);
    assert!((p1 - rho.entry(2, 2).re).abs() < 1e-12);
    assert!(p1 >= 0.0 && p2 >= 0.0 && p3 >= 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn channels_keep_states_physical(seed in any::<u64>(), gamma in 0.0f64..=1.0, fam in 0usize..3, w in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = random_density(3, &mut rng);
        let noise = NoiseModel::new(FAMILIES[fam], gamma).unwrap();
        s.apply_gate(&Gate::cnot(w, (w + 1) % 3), &noise).unwrap();
        s.apply_gate(&Gate::h(w), &noise).unwrap();
        prop_assert!((s.trace() - 1.0).abs() < 1e-10);
        prop_assert!(s.hermiticity_error() < 1e-12);
        prop_assert!(s.probabilities().iter().all(|&p| p > -1e-12));
    }
}
