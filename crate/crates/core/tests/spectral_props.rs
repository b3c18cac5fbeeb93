use proptest::prelude::*;
use qee_core::oracles::random::{self, random_density, random_hermitian, random_pure_vector, random_unitary};
use qee_core::spectral::{fidelity, fidelity_unclamped, hermitian_eig, psd_sqrt, purity, propagator};
use qee_core::{c64, CMatrix, DensityMatrix};

/// Square root straight from nalgebra's solver; eigenvalues at round-off
/// level are dropped so they do not leak in as `sqrt(eps)`.
fn oracle_sqrt(rho: &DensityMatrix) -> CMatrix {
    let eig = rho.as_matrix().clone().symmetric_eigen();
    let roots = eig.eigenvalues.map(|x| c64(if x > 1e-13 { x.sqrt() } else { 0.0 }, 0.0));
    &eig.eigenvectors * CMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// `(sum of singular values of sqrt(rho1) sqrt(rho2))^2`, independent of the
/// nested-root evaluation.
fn svd_fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> f64 {
    let product = oracle_sqrt(rho1) * oracle_sqrt(rho2);
    product.singular_values().sum().powi(2)
}

fn pair(seed: u64, dim: usize) -> (DensityMatrix, DensityMatrix) {
    let mut rng = random::rng(seed);
    let r1 = 1 + (seed as usize) % dim;
    let r2 = 1 + (seed as usize / 7) % dim;
    (
        random_density(&mut rng, dim, r1).unwrap(),
        random_density(&mut rng, dim, r2).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eig_reconstructs(seed in any::<u64>(), dim in 1usize..=64) {
        let m = random_hermitian(&mut random::rng(seed), dim);
        let eig = hermitian_eig(&m);
        let err = (eig.reconstruct() - m.as_matrix()).norm();
        prop_assert!(err < 1e-10 * dim as f64, "dim {dim}: {err:e}");
        prop_assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(eig.vectors.unitarity_defect() < 1e-10);
    }

    #[test]
    fn sqrt_squares_back(seed in any::<u64>(), dim in 1usize..=12) {
        let (p, _) = pair(seed, dim);
        let s = psd_sqrt(&p.as_hermitian()).unwrap();
        let err = (s.as_matrix() * s.as_matrix() - p.as_matrix()).norm();
        prop_assert!(err < 1e-12, "{err:e}");
    }

    #[test]
    fn fidelity_bounds_and_symmetry(seed in any::<u64>(), dim in 1usize..=8) {
        let (a, b) = pair(seed, dim);
        let fab = fidelity_unclamped(&a, &b).unwrap();
        let fba = fidelity_unclamped(&b, &a).unwrap();
        prop_assert!((-1e-9..=1.0 + 1e-9).contains(&fab));
        prop_assert!((fab - fba).abs() < 1e-9, "{fab} vs {fba}");
    }

    #[test]
    fn fidelity_matches_singular_value_route(seed in any::<u64>(), dim in 1usize..=8) {
        let (a, b) = pair(seed, dim);
        let f = fidelity(&a, &b).unwrap();
        let oracle = svd_fidelity(&a, &b);
        prop_assert!((f - oracle).abs() < 1e-9, "{f} vs {oracle}");
    }

    #[test]
    fn fidelity_of_pure_states_is_overlap(seed in any::<u64>(), dim in 1usize..=16) {
        let mut rng = random::rng(seed);
        let psi = random_pure_vector(&mut rng, dim);
        let phi = random_pure_vector(&mut rng, dim);
        let f = fidelity(&DensityMatrix::pure(&psi).unwrap(), &DensityMatrix::pure(&phi).unwrap()).unwrap();
        let overlap = psi.dotc(&phi).norm_sqr();
        prop_assert!((f - overlap).abs() < 1e-10, "{f} vs {overlap}");
    }

    #[test]
    fn fidelity_is_unitarily_invariant(seed in any::<u64>(), dim in 1usize..=8) {
        let (a, b) = pair(seed, dim);
        let u = random_unitary(&mut random::rng(seed ^ 0x55), dim);
        let before = fidelity(&a, &b).unwrap();
        let after = fidelity(&a.conjugated(&u), &b.conjugated(&u)).unwrap();
        prop_assert!((before - after).abs() < 1e-9);
    }

    #[test]
    fn propagator_is_unitary_and_composes(seed in any::<u64>(), dim in 1usize..=10, t in -5.0f64..5.0, s in -5.0f64..5.0) {
        let v = random_hermitian(&mut random::rng(seed), dim);
        let ut = propagator(&v, t).unwrap();
        let us = propagator(&v, s).unwrap();
        let uts = propagator(&v, t + s).unwrap();
        prop_assert!(ut.unitarity_defect() < 1e-10);
        prop_assert!((ut.compose(&us).as_matrix() - uts.as_matrix()).norm() < 1e-10);
    }

    #[test]
    fn purity_is_bounded(seed in any::<u64>(), dim in 1usize..=10) {
        let (a, _) = pair(seed, dim);
        let p = purity(&a);
        prop_assert!(p <= 1.0 + 1e-12 && p >= 1.0 / dim as f64 - 1e-12);
    }
}

#[test]
fn propagator_matches_taylor_series_for_small_generators() {
    // exp(-i V t) summed directly as an independent reference.
    let v = random_hermitian(&mut random::rng(9), 5);
    let t = 0.3;
    let x = v.as_matrix() * c64(0.0, -t);
    let mut term = CMatrix::identity(5, 5);
    let mut sum = term.clone();
    for k in 1..40 {
        term = &term * &x / c64(k as f64, 0.0);
        sum += &term;
    }
    let u = propagator(&v, t).unwrap();
    assert!((u.as_matrix() - sum).norm() < 1e-12);
}

#[test]
fn fidelity_worked_example() {
    let a = DensityMatrix::diagonal(&[0.6, 0.4]).unwrap();
    let b = DensityMatrix::diagonal(&[0.4, 0.6]).unwrap();
    // (sqrt(0.24) + sqrt(0.24))^2 for commuting states.
    let expected = (2.0 * 0.24f64.sqrt()).powi(2);
    assert!((fidelity(&a, &b).unwrap() - expected).abs() < 1e-15);
    assert!((svd_fidelity(&a, &b) - 0.96).abs() < 1e-12);
}
