//! Invariants that hold for every law, checked on random joint laws.

mod common;

use proptest::prelude::*;

use couplab::bounds::{
    backbone_check, exponential_bound, martingale_decomposition, moment_bound, operator_norm_l2, NORM_TOL,
};
use couplab::coupling::{sequential_coupling_tree, solve_transport, ExactCouplingTable, TabulatedFunction};
use couplab::fields::DEFAULT_CAP;
use couplab::linalg::Matrix;
use couplab::models::ExactJoint;
use couplab::verify::{central_moment, exact_tail};

/// A law on `{0..q}^n` with full support, and a function on it.
fn law_and_function() -> impl Strategy<Value = (ExactJoint, Vec<f64>)> {
    (2usize..=3, 1usize..=4).prop_flat_map(|(q, n)| {
        let size = q.pow(n as u32);
        (prop::collection::vec(0.01f64..1.0, size), prop::collection::vec(-3.0f64..3.0, size)).prop_map(
            move |(w, g)| {
                let total: f64 = w.iter().sum();
                (ExactJoint::from_masses(q, n, w.iter().map(|x| x / total).collect()).unwrap(), g)
            },
        )
    })
}

fn variations(joint: &ExactJoint, g: &[f64]) -> Vec<f64> {
    TabulatedFunction { name: "g".into(), values: g.to_vec() }.variations(joint.q(), joint.n())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_is_exact((joint, g) in law_and_function()) {
        let d = martingale_decomposition(&joint, &g).unwrap();
        prop_assert!(d.identity_error() <= 1e-10);
        prop_assert!(d.martingale_error() <= 1e-10);
        prop_assert!(d.orthogonality_defect() <= 1e-10);
    }

    #[test]
    fn increments_are_dominated_by_the_coupling_matrix((joint, g) in law_and_function()) {
        let d = martingale_decomposition(&joint, &g).unwrap();
        let table = ExactCouplingTable::new(&joint).unwrap();
        let check = backbone_check(&d, &table, &variations(&joint, &g)).unwrap();
        prop_assert!(check.holds(1e-9), "slack {}", check.min_slack);
    }

    #[test]
    fn tails_and_moments_obey_the_bounds((joint, g) in law_and_function(), frac in 0.05f64..1.0) {
        let table = ExactCouplingTable::new(&joint).unwrap();
        let delta = variations(&joint, &g);
        let norm_delta = delta.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(norm_delta > 0.0);
        let mean = joint.expectation(&g);
        let spread = g.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        let t = frac * spread;
        let envelope = operator_norm_l2(&table.envelope().entries, NORM_TOL).unwrap();
        let bound = exponential_bound(t, envelope, norm_delta).unwrap().value;
        prop_assert!(exact_tail(&joint, &g, mean, t) <= bound + 1e-12);
        for p in 1..=2u32 {
            let norm = operator_norm_l2(&table.moment(2 * p).entries, NORM_TOL).unwrap();
            let m = central_moment(&joint, &g, mean, 2 * p);
            prop_assert!(m <= moment_bound(p, norm, norm_delta).unwrap() + 1e-12);
        }
    }

    #[test]
    fn coupling_tree_legs_have_the_conditional_laws((joint, _) in law_and_function(), split in any::<prop::sample::Index>()) {
        let law = joint.prefix_masses();
        let k = split.index(joint.n());
        let past = vec![0u8; k];
        let (mut h1, mut h2) = (past.clone(), past);
        h1.push(1);
        h2.push(0);
        let t = sequential_coupling_tree(&law, &h1, &law, &h2, DEFAULT_CAP).unwrap();
        for (leg, h) in [(0, &h1), (1, &h2)] {
            let exact = joint.conditional_future(h).unwrap();
            for (x, y) in t.leg_laws[leg].iter().zip(exact.masses()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn transport_optimum_matches_vertex_enumeration(
        a in prop::collection::vec(0.01f64..1.0, 1..=4),
        b in prop::collection::vec(0.01f64..1.0, 1..=4),
        seed_cost in prop::collection::vec(0.0f64..2.0, 16),
    ) {
        let (sa, sb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
        let a: Vec<f64> = a.iter().map(|x| x / sa).collect();
        let b: Vec<f64> = b.iter().map(|x| x / sb).collect();
        let cost: Vec<Vec<f64>> = (0..a.len()).map(|i| (0..b.len()).map(|j| seed_cost[4 * i + j]).collect()).collect();
        let sol = solve_transport(&a, &b, &Matrix::from_rows(&cost), 1e-12).unwrap();
        prop_assert!((sol.cost - common::vertex_enumeration(&a, &b, &cost)).abs() <= 1e-9);
        prop_assert!(sol.certified(1e-9));
    }
}
