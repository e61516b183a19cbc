mod common;

use blockcoord::mapping::{block_prox_step, full_mapping, surrogate_h};
use common::{add, branch, point, problem, rng, weighted_sq, Family, FAMILIES};
use proptest::prelude::*;
use rand::Rng;

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(FAMILIES.to_vec())
}

fn sizes() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..4, 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn enumeration_lemmas_hold(fam in family(), sizes in sizes(), seed in any::<u64>()) {
        let p = problem(fam, &sizes, seed);
        let mut r = rng(seed ^ 1);
        for _ in 0..5 {
            let x = point(fam, p.dim(), &mut r);
            let y = point(fam, p.dim(), &mut r);
            for (name, slack) in common::lemma_slacks(&p, &x, &y) {
                prop_assert!(slack >= -1e-10, "{name}: {slack:e} on {fam:?}");
            }
        }
    }

    #[test]
    fn every_block_step_descends(fam in family(), sizes in sizes(), seed in any::<u64>()) {
        let p = problem(fam, &sizes, seed);
        let x = point(fam, p.dim(), &mut rng(seed ^ 2));
        let fx = p.objective(&x);
        let m = full_mapping(&p, &x).unwrap();
        for i in 0..p.n_blocks() {
            let di = &m.d[p.partition().range(i)];
            let li = p.lipschitz().get(i);
            let need = 0.5 * (1.0 + p.mu_psi()) * li * di.iter().map(|v| v * v).sum::<f64>();
            let got = fx - p.objective(&branch(&p, &x, &m.d, i));
            prop_assert!(got >= need - 1e-10 * (1.0 + fx.abs()), "block {i}: {got} < {need}");
        }
    }

    #[test]
    fn optimality_condition_holds(fam in family(), sizes in sizes(), seed in any::<u64>()) {
        // −∇_i f(x) + g_i(x) ∈ ∂Ψ_i(x_i + d_i(x))
        let p = problem(fam, &sizes, seed);
        let x = point(fam, p.dim(), &mut rng(seed ^ 3));
        let m = full_mapping(&p, &x).unwrap();
        let mut grad = vec![0.0; p.dim()];
        p.smooth().gradient(&x, &mut grad);
        let xd = add(&x, &m.d);
        for i in 0..p.n_blocks() {
            let r = p.partition().range(i);
            let s: Vec<f64> = grad[r.clone()].iter().zip(&m.g[r.clone()]).map(|(a, b)| b - a).collect();
            prop_assert!(p.regularizer().subdiff_contains(i, &xd[r], &s, 1e-9), "block {i} on {fam:?}");
        }
    }

    #[test]
    fn full_step_minimizes_surrogate(fam in family(), sizes in sizes(), seed in any::<u64>()) {
        let p = problem(fam, &sizes, seed);
        let mut r = rng(seed ^ 4);
        let x = point(fam, p.dim(), &mut r);
        let m = full_mapping(&p, &x).unwrap();
        prop_assert!((surrogate_h(&p, &x, &m.d) - m.h_value).abs() <= 1e-12 * (1.0 + m.h_value.abs()));
        for _ in 0..10 {
            let scale = 10f64.powi(r.random_range(-4..1));
            let e: Vec<f64> = m.d.iter().map(|v| v + scale * r.random_range(-1.0..1.0)).collect();
            let h = surrogate_h(&p, &x, &e);
            prop_assert!(h >= m.h_value - 1e-12 * (1.0 + m.h_value.abs()));
        }
    }

    #[test]
    fn squared_step_norm_identities(fam in family(), sizes in sizes(), seed in any::<u64>()) {
        let p = problem(fam, &sizes, seed);
        let x = point(fam, p.dim(), &mut rng(seed ^ 5));
        let m = full_mapping(&p, &x).unwrap();
        let d_sq = weighted_sq(&p, &m.d);
        prop_assert!((p.metric().norm_sq(&m.d) - d_sq).abs() <= 1e-12 * (1.0 + d_sq));
        prop_assert!((m.g_dual_norm.powi(2) - d_sq).abs() <= 1e-12 * (1.0 + d_sq));
        for i in 0..p.n_blocks() {
            let di = block_prox_step(&p, &x, i).unwrap();
            prop_assert_eq!(&di[..], &m.d[p.partition().range(i)]);
        }
    }
}

#[test]
fn mapping_vanishes_at_the_minimizer() {
    for fam in FAMILIES {
        let p = problem(fam, &[2, 3, 1], 77);
        let r = blockcoord::harness::reference_solve(&p, 1e-12).unwrap();
        let m = full_mapping(&p, &r.x_star).unwrap();
        assert!(m.g_dual_norm <= 1e-12, "{fam:?}");
        let x = point(fam, p.dim(), &mut rng(0));
        if full_mapping(&p, &x).unwrap().g_dual_norm > 0.0 {
            assert!(p.objective(&x) > r.f_star);
        }
    }
}
