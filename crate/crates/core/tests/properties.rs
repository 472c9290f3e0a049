use std::f64::consts::SQRT_2;

use gme_core::certify::random::{ginibre_mixed, haar_pure, local_unitary, separable, unit_vector};
use gme_core::certify::{chsh, chsh_max, ppt_report, witness_w, Axis, ChshSettings};
use gme_core::noise::{dephase, distinguishable_state, DephasingParams, DistinguishabilityParams};
use gme_core::qmath::{partial_trace, partial_transpose, states};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_settings(r: &mut ChaCha8Rng) -> ChshSettings {
    ChshSettings {
        a0: Axis(unit_vector(r)),
        a1: Axis(unit_vector(r)),
        b0: Axis(unit_vector(r)),
        b1: Axis(unit_vector(r)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ginibre_states_are_valid(seed in any::<u64>()) {
        let rho = ginibre_mixed(&mut rng(seed), vec![2, 2]);
        prop_assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        prop_assert!(rho.eigenvalues().iter().all(|&l| l >= -1e-10));
        let reduced = partial_trace(&rho, &[0]).unwrap();
        prop_assert!((reduced.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chsh_bounded_by_horodecki(seed in any::<u64>()) {
        let mut r = rng(seed);
        let rho = ginibre_mixed(&mut r, vec![2, 2]);
        let best = chsh_max(&rho).unwrap();
        prop_assert!(best.value <= 2.0 * SQRT_2 + 1e-9);
        for _ in 0..8 {
            prop_assert!(chsh(&rho, &random_settings(&mut r)).unwrap() <= best.value + 1e-9);
        }
        prop_assert!((chsh(&rho, &best.settings).unwrap() - best.value).abs() < 1e-6);
    }

    #[test]
    fn pure_states_respect_tsirelson(seed in any::<u64>()) {
        let psi = haar_pure(&mut rng(seed), vec![2, 2]);
        prop_assert!(chsh_max(&psi.projector()).unwrap().value <= 2.0 * SQRT_2 + 1e-9);
    }

    #[test]
    fn separable_states_pass_every_test(seed in any::<u64>(), terms in 1usize..6) {
        let mut r = rng(seed);
        let rho = separable(&mut r, terms);
        prop_assert!(witness_w(&rho).unwrap() >= -1e-12);
        prop_assert!(witness_w(&rho).unwrap() >= -1.0);
        prop_assert!(ppt_report(&rho).unwrap().negativity < 1e-9);
        prop_assert!(chsh_max(&rho).unwrap().value <= 2.0 + 1e-9);
        prop_assert!(chsh(&rho, &random_settings(&mut r)).unwrap() <= 2.0 + 1e-9);
    }

    #[test]
    fn local_unitaries_preserve_negativity_and_chsh_max(seed in any::<u64>()) {
        let mut r = rng(seed);
        let rho = ginibre_mixed(&mut r, vec![2, 2]);
        let moved = rho.conjugate_by(&local_unitary(&mut r)).unwrap();
        let (a, b) = (ppt_report(&rho).unwrap(), ppt_report(&moved).unwrap());
        prop_assert!((a.negativity - b.negativity).abs() < 1e-9);
        prop_assert!((chsh_max(&rho).unwrap().value - chsh_max(&moved).unwrap().value).abs() < 1e-9);
    }

    #[test]
    fn partial_transpose_keeps_trace_and_hermiticity(seed in any::<u64>()) {
        let rho = ginibre_mixed(&mut rng(seed), vec![2, 2]);
        let pt = partial_transpose(&rho, 1).unwrap();
        prop_assert!((pt.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(pt.is_hermitian(1e-12));
        let other = partial_transpose(&rho, 0).unwrap();
        // transposing either factor differs by a full transpose
        prop_assert!(other.max_abs_diff(&pt.transpose()) < 1e-12);
    }

    #[test]
    fn dephasing_preserves_states(seed in any::<u64>(), eta in 0.0f64..=1.0) {
        let rho = ginibre_mixed(&mut rng(seed), vec![2, 2]);
        let out = dephase(&rho, DephasingParams::new(eta).unwrap()).unwrap();
        prop_assert!((out.matrix().trace().re - 1.0).abs() < 1e-12);
        prop_assert!(out.eigenvalues().iter().all(|&l| l >= -1e-10));
        prop_assert!(ppt_report(&out).unwrap().negativity <= ppt_report(&rho).unwrap().negativity + 1e-9);
    }
}

#[test]
fn tsirelson_over_ten_thousand_states() {
    let mut r = rng(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        worst = worst.max(chsh_max(&ginibre_mixed(&mut r, vec![2, 2])).unwrap().value);
    }
    assert!(worst <= 2.0 * SQRT_2 + 1e-9, "{worst}");
}

#[test]
fn witness_nonnegative_on_ten_thousand_separable_states() {
    let mut r = rng(7);
    for k in 0..10_000 {
        let rho = separable(&mut r, 1 + k % 5);
        assert!(witness_w(&rho).unwrap() >= -1e-12);
    }
}

/// On the dephasing and distinguishability families, negativity is positive
/// exactly where the closed-form entanglement condition holds.
#[test]
fn ppt_agrees_with_family_closed_forms() {
    let singlet = states::singlet().projector();
    for k in 0..=100 {
        let eta = k as f64 / 100.0;
        let rho = dephase(&singlet, DephasingParams::new(eta).unwrap()).unwrap();
        let n = ppt_report(&rho).unwrap().negativity;
        assert!((n - (1.0 - eta) / 2.0).abs() < 1e-10);
        assert_eq!(n > 1e-9, eta < 1.0);
    }
    for k in 0..=100 {
        let v = k as f64 / 100.0;
        let rho = distinguishable_state(DistinguishabilityParams::new(v).unwrap());
        let n = ppt_report(&rho).unwrap().negativity;
        assert_eq!(n > 1e-9, v > 0.0, "v = {v}, negativity {n}");
    }
}

#[test]
fn ppt_matches_concurrence_on_random_states() {
    // two-qubit states are entangled iff the Wootters concurrence is positive
    let mut r = rng(99);
    let yy = gme_core::qmath::pauli::y().kron(&gme_core::qmath::pauli::y());
    for _ in 0..1000 {
        let rho = ginibre_mixed(&mut r, vec![2, 2]);
        let tilde = &(&yy * &rho.matrix().conj()) * &yy;
        let root = gme_core::qmath::psd_sqrt(rho.matrix()).unwrap();
        let m = (&(&root * &tilde) * &root).hermitian_part();
        let mut l: Vec<f64> = gme_core::qmath::hermitian_eig(&m)
            .unwrap()
            .values
            .iter()
            .map(|x| x.max(0.0).sqrt())
            .collect();
        l.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let concurrence = (l[0] - l[1] - l[2] - l[3]).max(0.0);
        let negativity = ppt_report(&rho).unwrap().negativity;
        if concurrence > 1e-6 || negativity > 1e-6 {
            assert_eq!(concurrence > 1e-9, negativity > 1e-9, "C = {concurrence}, N = {negativity}");
        }
    }
}
