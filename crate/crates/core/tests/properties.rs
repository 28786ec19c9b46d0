//! Property tests for the module invariants that hold on every input, not
//! just the curated fixtures.

use num_complex::Complex64;
use proptest::prelude::*;
use ptspect::*;

fn arbitrary_matrix(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    proptest::collection::vec((-10.0..10.0f64, -10.0..10.0f64), dim * dim).prop_map(move |raw| {
        ComplexMatrix::from_entries(
            dim,
            dim,
            raw.into_iter().map(|(re, im)| Complex64::new(re, im)).collect(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_transpose_involution_and_trace(m in arbitrary_matrix(6), subsystem in 1usize..=2) {
        let shape = SubsystemShape::bipartite(2, 3).unwrap();
        let pt = partial_transpose(&m, &shape, subsystem).unwrap();
        let back = partial_transpose(&pt, &shape, subsystem).unwrap();
        prop_assert!(back.approx_eq(&m, 1e-12));
        prop_assert!((pt.trace() - m.trace()).norm() == 0.0);
    }

    #[test]
    fn partial_trace_preserves_trace(m in arbitrary_matrix(8), subsystem in 1usize..=3) {
        let shape = SubsystemShape::new(vec![2, 2, 2]).unwrap();
        let reduced = partial_trace(&m, &shape, subsystem).unwrap();
        prop_assert!((reduced.trace() - m.trace()).norm() < 1e-12);
    }

    #[test]
    fn random_density_always_satisfies_state_invariants(
        seed in any::<u64>(),
        rank in 1usize..=6,
        pick in 0usize..=1,
    ) {
        let shape = if pick == 0 {
            SubsystemShape::bipartite(2, 2).unwrap()
        } else {
            SubsystemShape::bipartite(2, 3).unwrap()
        };
        let rank = rank.min(shape.total_dim());
        let rho = random_density(&shape, rank, seed).unwrap();
        let eigs = hermitian_eigenvalues(rho.matrix()).unwrap();
        prop_assert!(*eigs.last().unwrap() >= -1e-9);
        prop_assert!((eigs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(rho.matrix().hermitian_deviation() < 1e-12);
    }

    #[test]
    fn power_trace_equals_eigenvalue_power_sums(seed in any::<u64>(), k in 1usize..=8) {
        let shape = SubsystemShape::bipartite(2, 3).unwrap();
        let rho = random_density(&shape, 6, seed).unwrap();
        let eigs = hermitian_eigenvalues(rho.matrix()).unwrap();
        let sum: f64 = eigs.iter().map(|e| e.powi(k as i32)).sum();
        prop_assert!((power_trace(rho.matrix(), k) - Complex64::new(sum, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn newton_and_companion_invert_each_other(seed in any::<u64>()) {
        // moments of a generic state's partial transpose reconstruct to the
        // oracle spectrum, and the roots reproduce the moments
        let shape = SubsystemShape::bipartite(2, 2).unwrap();
        let rho = random_density(&shape, 4, seed).unwrap();
        let moments = measure_pt_moments(&rho, Mode::Exact).unwrap();
        let report = reconstruct(&moments, &shape).unwrap();
        prop_assert!(report.moment_residual < 1e-8);
        let oracle = hermitian_eigenvalues(
            &partial_transpose(rho.matrix(), &shape, 2).unwrap(),
        ).unwrap();
        for (a, b) in report.eigenvalues.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-8);
        }
        prop_assert!((report.eigenvalues.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn state_json_round_trips(seed in any::<u64>()) {
        let shape = SubsystemShape::bipartite(2, 2).unwrap();
        let rho = random_density(&shape, 4, seed).unwrap();
        let back = state_from_json(&state_to_json(&rho)).unwrap();
        prop_assert!(back.matrix().approx_eq(rho.matrix(), 1e-12));
    }

    #[test]
    fn shot_estimates_are_deterministic_and_bounded(seed in any::<u64>(), shots in 1u64..=2000) {
        let shape = SubsystemShape::bipartite(2, 2).unwrap();
        let rho = random_density(&shape, 4, seed).unwrap();
        let circuit = build_moment_circuit(
            2,
            &shape,
            MomentTarget::PartialTranspose,
            MeasuredPart::Real,
        ).unwrap();
        let a = run_shots(&circuit, &rho, shots, seed).unwrap();
        let b = run_shots(&circuit, &rho, shots, seed).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.estimate >= -1.0 && a.estimate <= 1.0);
        prop_assert!(a.stderr >= 0.0);
    }
}
