use cayley_core::cayley::{cayley_inverse_unitary, cayley_real, CayleyGate, DEFAULT_BRANCH_GUARD};
use cayley_core::circuit::{Architecture, Circuit};
use cayley_core::haar_stats::{deformed_density, inverse_phase_map, phase_map, weyl_density};
use cayley_core::interp::{bw_decode, fit_rational, Polynomial, RationalFunction, SamplePoint};
use cayley_core::io::{haar_sample_file, CircuitFile};
use cayley_core::linalg::{haar_unitary, hermitian_eig, unitarity_residual, Matrix};
use cayley_core::reduction::{paturi_bound, robustness_bound};
use cayley_core::scalar::Complex;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_hermitian(n: usize, seed: u64) -> Matrix<f64> {
    let mut r = rng(seed);
    let a = Matrix::from_fn(n, n, |_, _| Complex::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
    a.add(&a.adjoint()).scale(&Complex::new(0.5, 0.0))
}

fn q(p: i64, d: i64) -> BigRational {
    BigRational::new(p.into(), d.into())
}

fn two_gate_circuit(seed: u64) -> Circuit<f64> {
    let arch = Architecture::new(2, vec![vec![0, 1], vec![1, 0]]).unwrap();
    Circuit::sample(arch, &mut rng(seed), &DEFAULT_BRANCH_GUARD)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn eig_reconstructs_and_is_orthonormal(seed in any::<u64>(), n in prop::sample::select(vec![2usize, 4])) {
        let h = random_hermitian(n, seed);
        let tol = 1e-12;
        let e = hermitian_eig(&h, &tol).unwrap();
        prop_assert!(e.gram().max_abs_diff(&Matrix::identity(n)) < 10.0 * tol);
        prop_assert!(e.reconstruct().max_abs_diff(&h) < 10.0 * tol);
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn haar_is_unitary_and_replayable(seed in any::<u64>(), n in prop::sample::select(vec![2usize, 4])) {
        let u = haar_unitary::<f64, _>(n, &mut rng(seed));
        prop_assert!(unitarity_residual(&u) < 100.0 * f64::EPSILON);
        prop_assert_eq!(u, haar_unitary::<f64, _>(n, &mut rng(seed)));
    }

    #[test]
    fn path_is_unitary(seed in any::<u64>(), theta in -2.0f64..2.0) {
        let g = CayleyGate::<f64>::sample(4, &mut rng(seed), &DEFAULT_BRANCH_GUARD);
        prop_assert!(unitarity_residual(&g.gate_at(&theta)) < 1e-10);
    }

    #[test]
    fn cayley_inverse_roundtrips(seed in any::<u64>()) {
        let u = haar_unitary::<f64, _>(4, &mut rng(seed));
        if let Ok(e) = cayley_inverse_unitary(&u, &DEFAULT_BRANCH_GUARD) {
            prop_assert!(e.apply_fn(cayley_real).max_abs_diff(&u) < 1e-10);
        }
    }

    #[test]
    fn z_form_matches_theta_form(seed in any::<u64>(), z in -1.0f64..=1.0) {
        let g = CayleyGate::<f64>::sample(2, &mut rng(seed), &DEFAULT_BRANCH_GUARD);
        prop_assert!(g.gate_at_z(&z).max_abs_diff(&g.gate_at(&(1.0 + z))) < 1e-10);
    }

    #[test]
    fn q_times_gate_is_degree_n(seed in any::<u64>()) {
        // q(theta) C f(theta h) has entries of degree <= N: fit N + 1 nodes,
        // compare at fresh ones.
        let g = CayleyGate::<f64>::sample(2, &mut rng(seed), &DEFAULT_BRANCH_GUARD);
        let f = |th: f64| g.gate_at(&th).scale(&g.q(&th));
        let nodes = [-0.8, 0.0, 0.7];
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let pts: Vec<SamplePoint<Complex<f64>>> =
                nodes.iter().map(|&x| SamplePoint::new(Complex::new(x, 0.0), f(x)[(i, j)])).collect();
            let fit = fit_rational(&pts, 2, 0).unwrap();
            for x in [-0.5, -0.1, 0.3, 0.9, 1.2] {
                let v = fit.evaluate(&Complex::new(x, 0.0)).unwrap();
                prop_assert!((v - f(x)[(i, j)]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn state_norm_is_preserved(seed in any::<u64>(), theta in -3.0f64..3.0) {
        let c = two_gate_circuit(seed);
        prop_assert!((c.state_at(&theta).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn amplitude_matches_path_sum(seed in any::<u64>(), theta in -1.5f64..1.5) {
        let c = two_gate_circuit(seed);
        let direct = c.amplitude(&theta, 2);
        let paths = c.feynman_amplitude(&theta, 0, 2).unwrap();
        prop_assert!((direct - paths).norm() < 1e-10);
    }

    #[test]
    fn phase_map_is_odd_increasing_invertible(r in -3.1f64..3.1, dr in 1e-3f64..0.5, theta in 0.05f64..5.0) {
        prop_assert!((phase_map(-r, theta) + phase_map(r, theta)).abs() < 1e-14);
        if r + dr < std::f64::consts::PI {
            prop_assert!(phase_map(r + dr, theta) > phase_map(r, theta));
        }
        prop_assert!((inverse_phase_map(phase_map(r, theta), theta) - r).abs() < 1e-10);
    }

    #[test]
    fn densities_are_nonnegative(a in -3.14f64..3.14, b in -3.14f64..3.14, theta in 0.1f64..3.0) {
        prop_assert!(weyl_density(&[a, b]) >= 0.0);
        prop_assert!(deformed_density(&[a, b], theta) >= 0.0);
        prop_assert!(deformed_density(&[a, b, 0.3, -1.0], theta) >= 0.0);
    }

    #[test]
    fn bounds_are_monotone(d in 0usize..40, delta in 0.05f64..2.0, eps in 1e-30f64..1e-3) {
        let b = paturi_bound(d, delta, eps);
        prop_assert!(paturi_bound(d + 1, delta, eps).log2 >= b.log2);
        prop_assert!(paturi_bound(d, delta * 0.9, eps).log2 >= b.log2);
        prop_assert!(robustness_bound(d.max(1), delta, eps).value >= eps);
    }

    #[test]
    fn circuit_files_round_trip(seed in any::<u64>(), count in 1usize..4, dim in prop::sample::select(vec![2usize, 4])) {
        let f = haar_sample_file(dim, count, seed).unwrap();
        let text = f.to_json().unwrap();
        let back = CircuitFile::from_json(&text).unwrap();
        prop_assert_eq!(back.to_json().unwrap(), text);
    }
}

/// Planted exact rational function with `deg <= (k1, k2)` and positive
/// denominator on nonnegative nodes.
fn planted(r: &mut ChaCha8Rng, k1: usize, k2: usize) -> RationalFunction<BigRational> {
    let num: Vec<BigRational> = (0..=k1).map(|_| q(r.gen_range(-9..=9), r.gen_range(1..=4))).collect();
    let mut den: Vec<BigRational> = (0..=k2).map(|_| q(r.gen_range(0..=9), r.gen_range(1..=4))).collect();
    den[0] = q(1, 1);
    RationalFunction::new(Polynomial::new(num), Polynomial::new(den)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn bw_recovers_exactly(seed in any::<u64>(), k1 in 0usize..=5, k2 in 0usize..=5, t in 0usize..=3) {
        let mut r = rng(seed);
        let truth = planted(&mut r, k1, k2);
        let n = k1 + k2 + 2 * t + 1;
        let mut pts: Vec<SamplePoint<BigRational>> = (0..n)
            .map(|i| {
                let x = q(i as i64, 3);
                SamplePoint::new(x.clone(), truth.evaluate(&x).unwrap())
            })
            .collect();
        let bad = rand::seq::index::sample(&mut r, n, t).into_vec();
        for &i in &bad {
            pts[i].value = pts[i].value.clone() + q(r.gen_range(1..=50), r.gen_range(1..=7));
        }
        let d = bw_decode(&pts, k1, k2, t).unwrap();
        prop_assert!(d.function.same_function(&truth));
        let mut bad = bad;
        bad.sort_unstable();
        prop_assert_eq!(d.error_positions, bad);
    }

    #[test]
    fn fit_is_scale_covariant(seed in any::<u64>(), k1 in 0usize..=4, k2 in 0usize..=4, c in 1i64..20) {
        let mut r = rng(seed);
        let truth = planted(&mut r, k1, k2);
        let pts: Vec<SamplePoint<BigRational>> = (0..k1 + k2 + 1)
            .map(|i| {
                let x = q(i as i64, 2);
                SamplePoint::new(x.clone(), truth.evaluate(&x).unwrap())
            })
            .collect();
        let f = fit_rational(&pts, k1, k2).unwrap();
        prop_assert!(f.same_function(&truth));
        let scaled: Vec<SamplePoint<BigRational>> =
            pts.iter().map(|p| SamplePoint::new(p.node.clone(), p.value.clone() * q(c, 1))).collect();
        let g = fit_rational(&scaled, k1, k2).unwrap();
        for i in 0..5 {
            let x = q(2 * i + 1, 7);
            prop_assert_eq!(g.evaluate(&x).unwrap(), f.evaluate(&x).unwrap() * q(c, 1));
        }
    }
}
