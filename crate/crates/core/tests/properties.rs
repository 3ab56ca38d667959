mod support;

use fermion_tdhf::fock::{binomial, factorial, swap_operator};
use fermion_tdhf::harness::output::rows_csv;
use fermion_tdhf::harness::{run_error_bound, ExperimentConfig};
use fermion_tdhf::states::{quasifree_density, OccupationMeasure};
use fermion_tdhf::tdhf::{effective_hamiltonian, hf_energy, integrate, TdhfProblem};
use fermion_tdhf::tensor_ops::{commutator, hermitian_deviation, max_abs};
use fermion_tdhf::{
    antisymmetrizer, closure_deviation, evolve, make_propagator, mean_field_term, operator_norm,
    particle_moment, partial_trace_last, permutation_operator, reduced_density,
    reduced_density_fast, reduced_density_oracle, trace_norm, ModeSpace, Permutation,
    TwoBodyOperator, C64,
};
use proptest::prelude::*;
use support::*;

fn permutation(n: usize) -> impl Strategy<Value = Permutation> {
    Just((0..n).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(|images| Permutation::from_images(images).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn permutation_operators_form_a_representation(
        (pi, sigma) in (1usize..=4).prop_flat_map(|n| (permutation(n), permutation(n))),
        d in 1usize..=3,
    ) {
        let lhs = permutation_operator(&pi.compose(&sigma), d);
        let rhs = permutation_operator(&pi, d) * permutation_operator(&sigma, d);
        prop_assert!(max_abs(&(lhs - rhs)) == 0.0);
        prop_assert_eq!(pi.compose(&sigma).sign(), pi.sign() * sigma.sign());
    }

    #[test]
    fn antisymmetrizer_is_a_projector_of_binomial_rank(d in 1usize..=4, n in 1usize..=3) {
        let a = antisymmetrizer(d, n).unwrap();
        prop_assert!(max_abs(&(&a * &a - &a)) < 1e-12);
        prop_assert!(hermitian_deviation(&a) < 1e-14);
        prop_assert!((a.trace().re - binomial(d, n) as f64).abs() < 1e-10);
    }

    #[test]
    fn partial_trace_is_dual_to_embedding(d in 2usize..=3, seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = gaussian(&mut r, d * d, d * d);
        let b = gaussian(&mut r, d, d);
        let lhs = (partial_trace_last(&t, d, 2, 1).unwrap() * &b).trace();
        let rhs = (&t * fermion_tdhf::kron(&b, &fermion_tdhf::tensor_ops::identity(d))).trace();
        prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn reduced_density_routes_agree(d in 2usize..=5, seed in any::<u64>()) {
        let ms = ModeSpace::new(d).unwrap();
        let rho = fock_density(&ms, &mut rng(seed));
        for m in 1..=2 {
            let fast = reduced_density_fast(&rho, m).unwrap();
            let oracle = reduced_density_oracle(&rho, m).unwrap();
            prop_assert!(trace_norm(&(fast.matrix() - oracle.matrix()), true).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn reduced_density_trace_is_falling_factorial_moment(d in 2usize..=5, m in 1usize..=3, seed in any::<u64>()) {
        prop_assume!(m <= d);
        let ms = ModeSpace::new(d).unwrap();
        let rho = fock_density(&ms, &mut rng(seed));
        let nm = reduced_density(&rho, m).unwrap();
        let expected: f64 = (m..=d)
            .map(|n| rho.sector_weight(n) * factorial(n) / factorial(n - m))
            .sum();
        prop_assert!((nm.matrix().trace().re - expected).abs() < 1e-10);
        let n1 = reduced_density(&rho, 1).unwrap();
        prop_assert!(operator_norm(n1.matrix()) <= 1.0 + 1e-10);
        prop_assert!(nm.antisymmetric_leakage().unwrap() < 1e-10);
    }

    #[test]
    fn quasifree_states_close_exactly(
        p in prop::collection::vec(0.0f64..=1.0, 2..=5),
        seed in any::<u64>(),
    ) {
        let d = p.len();
        let ms = ModeSpace::new(d).unwrap();
        let measure = OccupationMeasure::with_basis(p, unitary(&mut rng(seed), d)).unwrap();
        let rho = quasifree_density(&ms, &measure).unwrap();
        for m in 2..=d.min(3) {
            prop_assert!(closure_deviation(&rho, m).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn exact_evolution_conserves(d in 2usize..=4, t in -3.0f64..3.0, lambda in 0.0f64..2.0, seed in any::<u64>()) {
        let ms = ModeSpace::new(d).unwrap();
        let mut r = rng(seed);
        let l = hermitian(&mut r, d);
        let v = TwoBodyOperator::symmetrized(&gaussian(&mut r, d * d, d * d), d).unwrap();
        let prop = make_propagator(&ms, &l, &v, lambda).unwrap();
        let rho = fock_density(&ms, &mut r);
        let later = evolve(&prop, &rho, t).unwrap();
        let scale = 1.0 + prop.energy(&rho).abs();
        prop_assert!((prop.energy(&later) - prop.energy(&rho)).abs() <= 1e-9 * scale);
        prop_assert!((later.matrix().trace().re - 1.0).abs() <= 1e-10);
        for m in 1..=2 {
            prop_assert!((particle_moment(&later, m) - particle_moment(&rho, m)).abs() <= 1e-9);
        }
    }

    #[test]
    fn mean_field_term_is_commutator_with_hf_potential(d in 2usize..=4, seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = density_block(&mut r, d);
        let v = TwoBodyOperator::symmetrized(&gaussian(&mut r, d * d, d * d), d).unwrap();
        let m = mean_field_term(&f, &v).unwrap();
        prop_assert!(max_abs(&(&m + m.adjoint())) <= 1e-10);
        let h = effective_hamiltonian(&f, &v).unwrap();
        prop_assert!(max_abs(&(m - commutator(&h, &f))) <= 1e-10);
    }

    #[test]
    fn interaction_symmetrization_commutes_with_swap(d in 1usize..=3, seed in any::<u64>()) {
        let v = TwoBodyOperator::symmetrized(&gaussian(&mut rng(seed), d * d, d * d), d).unwrap();
        let u = swap_operator(d);
        prop_assert!(operator_norm(&(&u * v.matrix() * &u - v.matrix())) <= 1e-12);
        prop_assert!(hermitian_deviation(v.matrix()) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn tdhf_flow_is_isospectral(d in 2usize..=4, seed in any::<u64>()) {
        let mut r = rng(seed);
        let l = hermitian(&mut r, d);
        let v = TwoBodyOperator::symmetrized(&gaussian(&mut r, d * d, d * d), d).unwrap();
        let v = v.scaled(1.0 / v.norm());
        let problem = TdhfProblem::new(l, v, 1.0, 1.0).unwrap();
        let f0 = density_block(&mut r, d) * C64::new(0.9, 0.0);
        let traj = integrate(&problem, &f0, &[0.0, 0.5, 1.0], 1e-9).unwrap();
        let spec0 = fermion_tdhf::tensor_ops::hermitian_eigenvalues(&f0).unwrap();
        let e0 = hf_energy(&problem, &f0).unwrap();
        for s in &traj.states {
            let spec = fermion_tdhf::tensor_ops::hermitian_eigenvalues(&s.f).unwrap();
            for (a, b) in spec.iter().zip(&spec0) {
                prop_assert!((a - b).abs() <= 1e-8);
            }
            prop_assert!((hf_energy(&problem, &s.f).unwrap() - e0).abs() <= 1e-8);
        }
    }

    #[test]
    fn error_rows_are_nonnegative_and_reproducible(seed in 0u64..1000) {
        let cfg = ExperimentConfig {
            time_grid: fermion_tdhf::harness::config::TimeGrid {
                t_max: 0.9,
                samples: 3,
                unit: fermion_tdhf::harness::config::TimeUnit::Tau,
            },
            ..ExperimentConfig::thermal_default(3, seed)
        };
        let a = run_error_bound(&cfg).unwrap();
        let b = run_error_bound(&cfg).unwrap();
        prop_assert_eq!(rows_csv(&a.rows), rows_csv(&b.rows));
        for row in &a.rows {
            prop_assert!(row.error_1.unwrap() >= 0.0 && row.error_2.unwrap() >= 0.0);
            prop_assert_eq!(row.bound.is_some(), row.t < row.tau);
        }
        prop_assert!(fermion_tdhf::harness::all_passed(&a.checks));
    }

    #[test]
    fn config_json_round_trips(d in 2usize..=6, seed in any::<u64>(), family in 1usize..=4) {
        let cfg = ExperimentConfig { family, ..ExperimentConfig::thermal_default(d, seed) };
        let text = serde_json::to_string(&cfg).unwrap();
        prop_assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }
}
