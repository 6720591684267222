mod common;

use nalgebra::{DMatrix, DVector};
use netcs::design::{run_until_unique, Strategy};
use netcs::experiment::{assemble_row_system, simulate, ExperimentPlan};
use netcs::network::{random_network, ring_network};
use netcs::recovery::{
    basis_pursuit, check_uniqueness, coherence, reconstruct_network, simplex, solve_l0, solve_row_prior, Method,
    RowStatus, Tolerances,
};
use netcs::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussianish(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_solve_agrees_with_joint_search(seed in any::<u64>()) {
        let case = common::random_row_case(seed);
        prop_assume!(case.report.unique());
        let res = solve_row_prior(&case.sys, case.k, &Tolerances::default()).unwrap();
        let (x1, x2) = common::joint_l0(&case.sys.a1, &case.sys.a2, &case.sys.b, case.k).unwrap();
        prop_assert!((DVector::from_vec(res.x1.clone()) - &x1).amax() < 1e-8);
        prop_assert!((DVector::from_vec(res.x2.clone()) - &x2).amax() < 1e-8);
        let (true_x1, p_ii) = common::true_x(&case);
        prop_assert!((x1 - true_x1).amax() < 1e-8);
        prop_assert!((x2[0] - p_ii).abs() < 1e-8);
    }

    #[test]
    fn basis_pursuit_beats_any_feasible_point(seed in any::<u64>(), m in 3usize..8, n in 8usize..14) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gaussianish(&mut rng, m, n);
        let x_f = DVector::from_fn(n, |_, _| if rng.random_bool(0.4) { rng.random_range(-2.0..2.0) } else { 0.0 });
        let b = &a * &x_f;
        let x = basis_pursuit(&a, &b, &Tolerances::default()).unwrap();
        prop_assert!(x.lp_norm(1) <= x_f.lp_norm(1) + 1e-6);
        prop_assert!((&a * &x - &b).norm() <= 1e-8 * b.norm().max(1.0));
        // a second feasible point: x_f plus a null-space direction
        let mut square = DMatrix::zeros(n, n);
        square.rows_mut(0, m).copy_from(&a);
        let svd = square.svd(false, true);
        let null = svd.v_t.unwrap().row(n - 1).transpose();
        prop_assert!((&a * &null).amax() < 1e-10);
        let other = &x_f + null * 0.5;
        prop_assert!(x.lp_norm(1) <= other.lp_norm(1) + 1e-6);
    }

    #[test]
    fn coherence_ignores_column_scaling(seed in any::<u64>(), m in 2usize..7, n in 2usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gaussianish(&mut rng, m, n);
        let scales: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..10.0) * if rng.random_bool(0.5) { -1.0 } else { 1.0 }).collect();
        let mut scaled = a.clone();
        for (j, s) in scales.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*s);
        }
        let mu = coherence(&a).unwrap().mu;
        prop_assert!((mu - coherence(&scaled).unwrap().mu).abs() <= 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&mu));
    }

    #[test]
    fn another_experiment_keeps_a_certificate(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_network(7, 2, 0.5, seed).unwrap();
        let plans = common::random_plans(7, 7, 3, &mut rng);
        let mut data = simulate(&net, &plans).unwrap();
        let before: Vec<bool> = (0..7)
            .map(|i| {
                let s = assemble_row_system(&data, i).unwrap();
                check_uniqueness(&s.a1, &s.a2, 2, 1e-8).unique()
            })
            .collect();
        data.push(&net, common::random_plans(7, 1, 3, &mut rng).remove(0)).unwrap();
        for (i, was) in before.into_iter().enumerate() {
            let s = assemble_row_system(&data, i).unwrap();
            prop_assert!(!was || check_uniqueness(&s.a1, &s.a2, 2, 1e-8).unique(), "row {} lost its certificate", i);
        }
    }

    #[test]
    fn simplex_vertex_matches_enumeration(seed in any::<u64>()) {
        // min c^T z, A z = b, z >= 0 with two constraints: the optimum is a
        // basic solution, so enumerate every 2-column basis.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 5;
        let a = gaussianish(&mut rng, 2, n);
        let z0 = DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0));
        let b = &a * &z0;
        let c = DVector::from_fn(n, |_, _| rng.random_range(0.1..2.0));
        let lp = simplex(&a, &b, &c).unwrap();
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                let basis = DMatrix::from_columns(&[a.column(i), a.column(j)]);
                if let Some(inv) = basis.try_inverse() {
                    let zb = inv * &b;
                    if zb.iter().all(|v| *v >= -1e-12) {
                        best = best.min(c[i] * zb[0] + c[j] * zb[1]);
                    }
                }
            }
        }
        prop_assert!((lp.objective - best).abs() <= 1e-9 * best.abs().max(1.0));
        prop_assert!(lp.z.iter().all(|v| *v >= -1e-12));
    }
}

#[test]
fn full_single_inputs_recover_the_network() {
    for seed in 0..10 {
        let net = random_network(8, 3, 0.5, seed).unwrap();
        let plans: Vec<ExperimentPlan> = (0..8).map(ExperimentPlan::single).collect();
        let data = simulate(&net, &plans).unwrap();
        for method in [Method::L0Exhaustive, Method::BasisPursuit] {
            let est = reconstruct_network(&data, 3, method, &Tolerances::default()).unwrap();
            assert!((&est.q_hat - net.q0()).amax() < 1e-8, "{method:?} seed {seed}");
            assert!((&est.p_hat - net.p0()).amax() < 1e-8);
            for r in &est.reports {
                assert_eq!(r.status, RowStatus::Recovered);
                assert_eq!(r.support, net.row_support(r.row));
            }
        }
    }
}

#[test]
fn certified_designs_reconstruct_exactly() {
    let tol = Tolerances::default();
    for seed in 0..8 {
        let net = random_network(10, 2, 0.5, seed).unwrap();
        let out = run_until_unique(&net, Strategy::Targeted, 4, 2, 50, seed, &tol).unwrap();
        assert!(out.unique);
        let data = out.state.data.unwrap();
        let est = reconstruct_network(&data, 2, Method::L0Exhaustive, &tol).unwrap();
        assert!(est.all_unique());
        assert!((&est.q_hat - net.q0()).amax() < 1e-8, "seed {seed}");
        assert!((&est.p_hat - net.p0()).amax() < 1e-8);
    }
}

#[test]
fn ambiguity_names_both_candidates() {
    // ring with inputs at 0, 1, 2: row 4 sees states 2 and 3 only through the
    // same direction
    let net = ring_network(6).unwrap();
    let data = simulate(&net, &(0..3).map(ExperimentPlan::single).collect::<Vec<_>>()).unwrap();
    let sys = assemble_row_system(&data, 4).unwrap();
    let a = sys.full_matrix();
    let err = solve_l0(&a, &sys.b, 1, &Tolerances::default());
    assert!(err.is_err());
    let est = reconstruct_network(&data, 1, Method::L0Exhaustive, &Tolerances::default()).unwrap();
    assert_eq!(est.reports[0].status, RowStatus::Ambiguous);
    assert!(est.reports[0].ambiguity.is_some());
    assert!(est.reports[0].certificate.deficient_subset.is_some());
}

#[test]
fn infeasible_rows_are_reported() {
    let a = DMatrix::identity(3, 3);
    let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
    assert!(matches!(solve_l0(&a, &b, 2, &Tolerances::default()), Err(Error::InfeasibleAtSparsity { k: 2 })));
    let wide = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    let inconsistent = DVector::from_vec(vec![1.0, 2.0]);
    assert!(matches!(basis_pursuit(&wide, &inconsistent, &Tolerances::default()), Err(Error::Infeasible { .. })));
}
