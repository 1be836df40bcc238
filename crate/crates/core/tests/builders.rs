use midselect::builders::{
    basis_acceptance, binary_bound_filter, gray_decode, gray_to_binary, mixed_decode, onehot_compress,
    onehot_output_wires, onehot_postselect, onehot_zero_wires, verify_filter, wall_to_onehot, BoundCheck,
    EncodingSpec, FilterVariant,
};
use midselect::linalg::phase_insensitive_distance;
use midselect::sim::{circuit_unitary, run, Statevector};
use midselect::{inverse, transpile, Circuit, Gate, Instruction, McxStrategy, NoiseModel};

const TOL: f64 = 1e-10;

fn assert_oracle(spec: EncodingSpec) {
    for &v in spec.variants() {
        let c = spec.filter(v).unwrap();
        let r = verify_filter(&spec, &c, TOL).unwrap();
        assert!(r.all_passed(), "{spec:?} {v:?}: failures {:?}", r.failures);
        assert_eq!(r.checked, 1 << spec.data_width());
    }
}

#[test]
fn khot_exhaustive() {
    for n in 1..=8 {
        for k in 1..=n {
            assert_oracle(EncodingSpec::KHot { n, k });
        }
    }
}

#[test]
fn onehot_exhaustive() {
    for n in 2..=8 {
        assert_oracle(EncodingSpec::OneHot { n });
    }
}

#[test]
fn domain_wall_exhaustive() {
    for n in 2..=8 {
        assert_oracle(EncodingSpec::DomainWall { n });
    }
}

#[test]
fn binary_bound_exhaustive() {
    for n in 1..=6 {
        for mu in 0..1u64 << n {
            assert_oracle(EncodingSpec::BinaryBound { n, mu });
        }
    }
    for n in 7..=8 {
        for mu in [0, 1, 42, 100, (1 << n) - 2, (1 << n) - 1, 0b1010_1010 & ((1 << n) - 1)] {
            assert_oracle(EncodingSpec::BinaryBound { n, mu });
        }
    }
}

#[test]
fn gray_bound_exhaustive() {
    for n in 1..=5 {
        for mu in 0..1u64 << n {
            assert_oracle(EncodingSpec::GrayBound { n, mu });
        }
    }
    for n in 6..=8 {
        for mu in [0, 5, 42, (1 << n) - 1, (1 << (n - 1)) + 3] {
            assert_oracle(EncodingSpec::GrayBound { n, mu });
        }
    }
}

#[test]
fn mixed_exhaustive() {
    for l in 1..=4 {
        for m in 1..=8 / l {
            assert_oracle(EncodingSpec::Mixed { l, m, mu_last: None });
            for mu in [0, (1 << m) / 2, (1 << m) - 1] {
                assert_oracle(EncodingSpec::Mixed { l, m, mu_last: Some(mu) });
            }
        }
    }
}

#[test]
fn mixed_decoding_enumerates_values() {
    let (l, m) = (3, 2);
    let mut seen: Vec<u64> = (0..1u64 << (l * m)).filter_map(|x| mixed_decode(l, m, x)).collect();
    seen.sort_unstable();
    assert_eq!(seen, (0..(l as u64) * 3).collect::<Vec<_>>());
}

#[test]
fn mu_42_uses_three_checks_and_accepts_43_values() {
    let c = binary_bound_filter(6, 42, BoundCheck::Full).unwrap();
    let checks = c.instructions().iter().filter(|i| matches!(i, Instruction::Gate(Gate::Mcx { .. }))).count();
    assert_eq!(checks, 3);
    let accepted = (0..64u64).filter(|&x| basis_acceptance(&c, x).unwrap().0 > 0.5).count();
    assert_eq!(accepted, 43);
    // a single check already removes every value with the top zero bit set
    let partial = binary_bound_filter(6, 42, BoundCheck::Partial(1)).unwrap();
    let kept = (0..64u64).filter(|&x| basis_acceptance(&partial, x).unwrap().0 > 0.5).count();
    assert_eq!(kept, 64 - 16);
}

#[test]
fn transpiled_filters_agree_with_the_oracle_under_density_simulation() {
    let specs = [
        EncodingSpec::KHot { n: 4, k: 2 },
        EncodingSpec::OneHot { n: 5 },
        EncodingSpec::DomainWall { n: 4 },
        EncodingSpec::BinaryBound { n: 5, mu: 19 },
        EncodingSpec::GrayBound { n: 4, mu: 9 },
        EncodingSpec::Mixed { l: 2, m: 2, mu_last: Some(2) },
    ];
    let noise = NoiseModel::none();
    for spec in specs {
        for &v in spec.variants() {
            for strategy in [McxStrategy::AncillaFree, McxStrategy::BorrowedAncilla] {
                let low = transpile(&spec.filter(v).unwrap(), strategy).unwrap();
                for x in 0..1u64 << spec.data_width() {
                    let p = run(&low, &noise, x as usize).map_or(0.0, |s| s.acceptance());
                    let want = if spec.is_valid(x) { 1.0 } else { 0.0 };
                    assert!((p - want).abs() < TOL, "{spec:?} {v:?} {strategy:?} x={x:b}: {p}");
                }
            }
        }
    }
}

#[test]
fn variant_mismatch_is_an_error() {
    assert!(EncodingSpec::DomainWall { n: 3 }.filter(FilterVariant::Exact).is_err());
    assert!(EncodingSpec::KHot { n: 3, k: 0 }.filter(FilterVariant::SingleAncilla).is_err());
    assert!(EncodingSpec::BinaryBound { n: 3, mu: 8 }.validate().is_err());
}

fn permutation(c: &Circuit) -> Vec<usize> {
    let n = c.n_qubits();
    (0..1usize << n)
        .map(|x| {
            let mut s = Statevector::basis(n, x).unwrap();
            s.run(c).unwrap();
            let (y, a) = s.amplitudes().iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap();
            assert!((a.norm() - 1.0).abs() < TOL, "not a basis permutation at {x}");
            y
        })
        .collect()
}

fn assert_bijective(p: &[usize]) {
    let mut sorted = p.to_vec();
    sorted.sort_unstable();
    assert!(sorted.iter().enumerate().all(|(i, &v)| i == v));
}

fn assert_round_trip(c: &Circuit) {
    let mut rt = c.clone();
    rt.append(&inverse(c).unwrap()).unwrap();
    let u = circuit_unitary(&rt).unwrap();
    let d = 1usize << c.n_qubits();
    let id: Vec<_> = (0..d * d).map(|i| if i % (d + 1) == 0 { midselect::C64::new(1.0, 0.0) } else { midselect::C64::new(0.0, 0.0) }).collect();
    assert!(phase_insensitive_distance(&id, &u) < TOL);
}

#[test]
fn onehot_compression_maps_positions_to_binary() {
    for n in 2..=8 {
        let c = onehot_compress(n).unwrap();
        assert!(c.ancilla().is_empty());
        let perm = permutation(&c);
        assert_bijective(&perm);
        let out = onehot_output_wires(n);
        let zeros = onehot_zero_wires(n);
        for p in 0..n {
            let y = perm[1 << p];
            let value: usize = out.iter().enumerate().map(|(k, &w)| (y >> w & 1) << k).sum();
            assert_eq!(value, p, "n={n} position {p}");
            assert!(zeros.iter().all(|&w| y >> w & 1 == 0));
        }
        // every non-one-hot input sets a zero wire or lands out of range
        for x in 0..1usize << n {
            if x.count_ones() != 1 {
                let y = perm[x];
                let value: usize = out.iter().enumerate().map(|(k, &w)| (y >> w & 1) << k).sum();
                assert!(zeros.iter().any(|&w| y >> w & 1 == 1) || value >= n, "n={n} x={x:b}");
            }
        }
        assert_round_trip(&c);
    }
}

#[test]
fn wall_to_onehot_marks_the_wall_end() {
    for n in 2..=8 {
        let c = wall_to_onehot(n).unwrap();
        let perm = permutation(&c);
        assert_bijective(&perm);
        assert_eq!(perm[0], 0);
        for w in 1..=n {
            assert_eq!(perm[(1 << w) - 1], 1 << (w - 1), "n={n} w={w}");
        }
        assert_round_trip(&c);
    }
}

#[test]
fn gray_to_binary_decodes_every_value() {
    for n in 2..=8 {
        let c = gray_to_binary(n).unwrap();
        let perm = permutation(&c);
        assert_bijective(&perm);
        for g in 0..1usize << n {
            assert_eq!(perm[g] as u64, gray_decode(g as u64));
        }
        assert_round_trip(&c);
    }
}

#[test]
fn onehot_postselect_restores_accepted_states() {
    for n in 2..=8 {
        let c = onehot_postselect(n).unwrap();
        for p in 0..n {
            let (acc, intact) = basis_acceptance(&c, 1 << p).unwrap();
            assert!((acc - 1.0).abs() < TOL && intact);
        }
    }
}
