use proptest::prelude::*;
use qee_core::measure::{coherence_factor, is_separable, pure_state_entanglement, qubit_purity, DEFAULT_SEPARABILITY_TOL};
use qee_core::oracles::random::{self, random_amplitudes, random_density, random_hermitian, random_pure_vector, random_unitary};
use qee_core::oracles::{bell_block_verify, negativity, random_channel, random_instance, strictly_orthogonal};
use qee_core::spectral::{fidelity, fidelity_unclamped, kron, linear_entropy, purity, trace};
use qee_core::{
    c64, qee, qee_of_state, CMatrix, DensityMatrix, DephasingModel, EnvComponent, FactoredEnvironment,
    JointDephasingState, QubitAmplitudes, Side, UnitaryMatrix,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evolved_states_satisfy_invariants(seed in any::<u64>(), n in 1usize..=6, t in 0.0f64..10.0) {
        let rank = 1 + seed as usize % n;
        let (model, amps) = random_instance(n, rank, seed).unwrap();
        let state = model.evolve(amps, t).unwrap();
        prop_assert!(state.check_invariants(1e-10).is_ok());
        // Conditional evolution is unitary: spectra are frozen.
        let r0 = model.initial_env().eigenvalues();
        for r in [state.r00(), state.r11()] {
            let ev = r.eigenvalues();
            prop_assert!(ev.iter().zip(&r0).all(|(x, y)| (x - y).abs() < 1e-10));
        }
    }

    #[test]
    fn zero_time_is_a_product(seed in any::<u64>(), n in 1usize..=5) {
        let (model, amps) = random_instance(n, n, seed).unwrap();
        let psi = qee_core::CVector::from_vec(vec![amps.a(), amps.b()]);
        let expected = kron(DensityMatrix::pure(&psi).unwrap().as_matrix(), model.initial_env().as_matrix());
        let full = model.evolve(amps, 0.0).unwrap().assemble_full().unwrap();
        prop_assert!((full.as_matrix() - expected).norm() < 1e-12);
    }

    #[test]
    fn asymmetric_form_gives_the_same_measure(seed in any::<u64>(), n in 1usize..=5, t in 0.0f64..6.0) {
        let (model, amps) = random_instance(n, 1 + seed as usize % n, seed).unwrap();
        let (w0, w1) = model.build_propagators(t).unwrap();
        let (id, w) = model.asymmetrize(t).unwrap();
        let direct = JointDephasingState::from_propagators(amps, model.initial_env(), &w0, &w1).unwrap();
        // The relative pair acts on the evolved R00(t).
        let shifted = JointDephasingState::from_propagators(amps, direct.r00(), &id, &w).unwrap();
        prop_assert!((qee_of_state(&direct).unwrap() - qee_of_state(&shifted).unwrap()).abs() < 1e-10);
        prop_assert!((direct.r11().as_matrix() - shifted.r11().as_matrix()).norm() < 1e-10);
    }

    #[test]
    fn measure_range_and_clamp_margin(seed in any::<u64>(), n in 1usize..=6, t in 0.0f64..10.0) {
        let (model, amps) = random_instance(n, 1 + seed as usize % n, seed).unwrap();
        let s = model.evolve(amps, t).unwrap();
        let raw = amps.weight() * (1.0 - fidelity_unclamped(s.r00(), s.r11()).unwrap());
        prop_assert!((-1e-9..=1.0 + 1e-9).contains(&raw));
        let e = qee_of_state(&s).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
    }

    #[test]
    fn pure_environment_reduction(seed in any::<u64>(), n in 1usize..=8, t in 0.0f64..10.0) {
        let mut rng = random::rng(seed);
        let env = random_pure_vector(&mut rng, n);
        let model = DephasingModel::new(
            random_hermitian(&mut rng, n),
            random_hermitian(&mut rng, n),
            DensityMatrix::pure(&env).unwrap(),
        ).unwrap();
        let amps = random_amplitudes(&mut rng);
        let state = model.evolve(amps, t).unwrap();
        let e = qee_of_state(&state).unwrap();
        prop_assert!((e - 2.0 * linear_entropy(&state.reduced_qubit())).abs() < 1e-10);
        let (w0, w1) = model.build_propagators(t).unwrap();
        prop_assert!((pure_state_entanglement(amps, &env, &w0, &w1).unwrap() - e).abs() < 1e-10);
        // |tr R01|^2 = F for pure environments.
        let f = fidelity(state.r00(), state.r11()).unwrap();
        prop_assert!((coherence_factor(&state).powi(2) - f).abs() < 1e-10);
    }

    #[test]
    fn purity_formula_matches_reduced_state(seed in any::<u64>(), n in 1usize..=6, t in 0.0f64..10.0) {
        let (model, amps) = random_instance(n, 1 + seed as usize % n, seed).unwrap();
        let state = model.evolve(amps, t).unwrap();
        // Trace the qubit out of the assembled matrix by hand.
        let full = state.assemble_full().unwrap();
        let m = full.as_matrix();
        let mut q = CMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                q[(i, j)] = trace(&m.view((i * n, j * n), (n, n)).into_owned());
            }
        }
        let reduced = DensityMatrix::new(q).unwrap();
        prop_assert!((purity(&reduced) - qubit_purity(&state)).abs() < 1e-12);
    }

    #[test]
    fn channels_never_increase_the_measure(seed in any::<u64>(), n in 2usize..=4, kraus in 1usize..=4) {
        let (model, amps) = random_instance(n, 1 + seed as usize % n, seed).unwrap();
        let state = model.evolve(amps, 1.3).unwrap();
        let ch = random_channel(n, kraus, seed ^ 0xC4).unwrap();
        let out = state.apply_env_channel(&ch).unwrap();
        prop_assert!(out.check_invariants(1e-9).is_ok());
        prop_assert!(qee_of_state(&out).unwrap() <= qee_of_state(&state).unwrap() + 1e-10);
        // The channel output alone is a valid density matrix.
        prop_assert!(DensityMatrix::new(ch.apply(model.initial_env().as_matrix())).is_ok());
    }

    #[test]
    fn local_unitaries_keep_the_measure(seed in any::<u64>(), n in 1usize..=4, theta in 0.0f64..6.3) {
        let (model, amps) = random_instance(n, 1 + seed as usize % n, seed).unwrap();
        let state = model.evolve(amps, 0.8).unwrap();
        let before = qee_of_state(&state).unwrap();
        let mut rng = random::rng(seed ^ 0xAB);
        let env = state.apply_local_unitary(Side::Environment, &random_unitary(&mut rng, n)).unwrap();
        let qubit = state.apply_local_unitary(Side::Qubit, &random_unitary(&mut rng, 2)).unwrap();
        let phase = UnitaryMatrix::new(CMatrix::from_row_slice(
            2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(theta.cos(), theta.sin())],
        )).unwrap();
        let phased = state.apply_local_unitary(Side::Qubit, &phase).unwrap();
        for s in [&env, &qubit, &phased] {
            prop_assert!(s.check_invariants(1e-9).is_ok());
            prop_assert!((qee_of_state(s).unwrap() - before).abs() < 1e-10);
        }
        prop_assert!(phased.pointer_basis().as_matrix() == &CMatrix::identity(2, 2));
    }

    #[test]
    fn zero_set_matches_separability(seed in any::<u64>(), n in 1usize..=4, symmetric in any::<bool>()) {
        let mut rng = random::rng(seed);
        let v0 = random_hermitian(&mut rng, n);
        let v1 = if symmetric { v0.clone() } else { random_hermitian(&mut rng, n) };
        let r0 = random_density(&mut rng, n, 1 + seed as usize % n).unwrap();
        let amps = random_amplitudes(&mut rng);
        let state = DephasingModel::new(v0, v1, r0).unwrap().evolve(amps, 2.1).unwrap();
        let e = qee_of_state(&state).unwrap();
        let f = fidelity(state.r00(), state.r11()).unwrap();
        let zero = e < 1e-12;
        let predicted = amps.a().norm() * amps.b().norm() < 1e-8 || f > 1.0 - 1e-10;
        prop_assert_eq!(zero, predicted, "qee {} fidelity {}", e, f);
        if symmetric {
            prop_assert!(is_separable(state.r00(), state.r11(), DEFAULT_SEPARABILITY_TOL).unwrap());
        }
    }

    #[test]
    fn generic_pairs_are_not_orthogonal(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = random::rng(seed);
        let a = random_density(&mut rng, n, 1 + seed as usize % n).unwrap();
        let b = random_density(&mut rng, n, 1 + (seed as usize / 3) % n).unwrap();
        prop_assert!(!strictly_orthogonal(&a, &b, 1e-10).unwrap());
        prop_assert!(fidelity(&a, &b).unwrap() >= 1e-9);
    }
}

fn random_qubit_component(rng: &mut random::QeeRng) -> EnvComponent {
    let rank = 1 + (rand::Rng::random::<u32>(rng) % 2) as usize;
    EnvComponent::new(
        random_density(rng, 2, rank).unwrap(),
        random_hermitian(rng, 2),
        random_hermitian(rng, 2),
    )
    .unwrap()
}

#[test]
fn factored_and_full_agree_for_three_components() {
    for seed in 0..5 {
        let mut rng = random::rng(seed);
        let env = FactoredEnvironment::new((0..3).map(|_| random_qubit_component(&mut rng)).collect()).unwrap();
        let amps = random_amplitudes(&mut rng);
        let model = env.to_model().unwrap();
        for i in 0..20 {
            let t = 0.25 * i as f64;
            let factored = env.evolve_factored(amps, t).unwrap();
            let full = model.evolve(amps, t).unwrap();
            let tensor = factored.to_full().unwrap();
            assert!((tensor.r00().as_matrix() - full.r00().as_matrix()).norm() < 1e-9);
            assert!((tensor.r11().as_matrix() - full.r11().as_matrix()).norm() < 1e-9);
            assert!((tensor.r01() - full.r01()).norm() < 1e-9);
            assert!((tensor.r10() - full.r10()).norm() < 1e-9);
            assert!((factored.qee().unwrap() - qee_of_state(&full).unwrap()).abs() < 1e-8);
            assert!((factored.trace_r01() - trace(full.r01())).norm() < 1e-10);
            assert!((factored.qubit_purity() - qubit_purity(&full)).abs() < 1e-10);
        }
    }
}

#[test]
fn pointer_states_never_entangle() {
    let (model, _) = random_instance(4, 4, 3).unwrap();
    for amps in [QubitAmplitudes::pointer(0), QubitAmplitudes::pointer(1)] {
        for i in 0..25 {
            let s = model.evolve(amps, 0.4 * i as f64).unwrap();
            assert_eq!(qee_of_state(&s).unwrap(), 0.0);
        }
    }
}

#[test]
fn bell_certificate_implies_maximal_measure() {
    // |0> -> |1>, |1> -> |2>, ... on the support {|0>, |1>} of a rank-2 state in dim 4.
    let r0 = DensityMatrix::diagonal(&[0.55, 0.45, 0.0, 0.0]).unwrap();
    let mut perm = CMatrix::zeros(4, 4);
    for (from, to) in [(0, 2), (1, 3), (2, 0), (3, 1)] {
        perm[(to, from)] = c64(1.0, 0.0);
    }
    let w = UnitaryMatrix::new(perm).unwrap();
    for phi in [0.0, 0.7, 2.5] {
        let amps = QubitAmplitudes::with_phase(phi);
        let report = bell_block_verify(amps, &r0, &w, 1e-10).unwrap();
        assert!(report.passed);
        let s = JointDephasingState::from_propagators(amps, &r0, &UnitaryMatrix::identity(4), &w).unwrap();
        assert!((qee(amps, s.r00(), s.r11()).unwrap() - 1.0).abs() < 1e-10);
        assert!((negativity(&s.assemble_full().unwrap()).unwrap() - 0.5).abs() < 1e-12);
    }
}
