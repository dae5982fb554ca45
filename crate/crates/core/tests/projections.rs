mod common;

use approx::assert_abs_diff_eq;
use ipgd::linalg::{l1_norm, norm};
use ipgd::model::{ConstraintSet, Transform, Tree};
use ipgd::proj::{
    measure_epsilon, project_k_sparse, project_l1_ball, project_tree_sparse, proximal_l1, InexactOperator,
};
use ndarray::{array, Array1};
use proptest::prelude::*;

fn vector(d: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Array1<f64>> {
    d.prop_flat_map(|d| prop::collection::vec(-5.0..5.0f64, d).prop_map(Array1::from))
}

fn coefficient_subset(n: usize, mask: u32) -> InexactOperator {
    InexactOperator::CoefficientSubset {
        basis: Transform::Dct { n },
        indices: (0..n).filter(|i| mask >> i & 1 == 1).collect(),
    }
}

#[test]
fn l1_ball_two_dimensional_example() {
    // minimize (a − 2)² + (b − 1)² on the face b = 1 − a by bisection on the derivative
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let a = (lo + hi) / 2.0;
        if 2.0 * (a - 2.0) + 2.0 * a < 0.0 {
            lo = a;
        } else {
            hi = a;
        }
    }
    let a = lo.min(1.0);
    let p = project_l1_ball(array![2.0, 1.0].view(), 1.0);
    assert_abs_diff_eq!(p[0], a, epsilon = 1e-6);
    assert_abs_diff_eq!(p[1], 1.0 - a, epsilon = 1e-6);
}

#[test]
fn tree_projection_on_seven_nodes_matches_enumeration() {
    let tree = Tree::new(3).unwrap();
    let v = array![1.0, 0.1, 4.0, 0.0, 0.0, 0.2, 0.0];
    let p = project_tree_sparse(v.view(), 2, &tree).unwrap();
    assert_eq!(p, array![1.0, 0.0, 4.0, 0.0, 0.0, 0.0, 0.0]);
    assert_eq!(p, common::brute_tree(v.view(), 2, 3));
}

#[test]
fn hard_threshold_matches_enumeration_for_d10() {
    let v = array![0.3, -2.0, 1.1, 0.7, -0.2, 1.9, -1.4, 0.05, 0.6, -0.9];
    assert_eq!(project_k_sparse(v.view(), 3), common::brute_k_sparse(v.view(), 3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn l1_projection_matches_face_enumeration(v in vector(1..=9), r in 0.1..6.0f64) {
        let p = project_l1_ball(v.view(), r);
        prop_assert!(common::dist(p.view(), common::brute_l1_ball(v.view(), r).view()) < 1e-9);
    }

    #[test]
    fn k_sparse_projection_matches_enumeration(v in vector(1..=9), k in 1usize..9) {
        let k = k.min(v.len());
        let p = project_k_sparse(v.view(), k);
        prop_assert!(common::dist(p.view(), common::brute_k_sparse(v.view(), k).view()) < 1e-12);
    }

    #[test]
    fn tree_projection_matches_enumeration(levels in 1usize..=3, k in 1usize..7, seed in any::<u64>()) {
        let tree = Tree::new(levels).unwrap();
        let d = tree.dim();
        let k = k.min(d);
        let v = ipgd::linalg::gaussian_vector(&mut ipgd::linalg::rng(seed, 0), d);
        let p = project_tree_sparse(v.view(), k, &tree).unwrap();
        prop_assert!(common::dist(p.view(), common::brute_tree(v.view(), k, levels).view()) < 1e-12);
    }

    #[test]
    fn projections_are_idempotent(v in vector(7..=7), k in 1usize..=7, r in 0.1..4.0f64, mask in 0u32..128) {
        let sets = [
            ConstraintSet::L1Ball { radius: r },
            ConstraintSet::KSparse { k },
            ConstraintSet::TreeSparse { k, levels: 3 },
            ConstraintSet::CoefficientSubset {
                basis: Transform::Dct { n: 7 },
                indices: (0..7).filter(|i| mask >> i & 1 == 1).collect(),
            },
        ];
        for set in &sets {
            let once = set.project(v.view()).unwrap();
            let twice = set.project(once.view()).unwrap();
            prop_assert!(common::dist(once.view(), twice.view()) <= 1e-12 * (1.0 + norm(once.view())));
            prop_assert!(set.contains(once.view(), 1e-12));
        }
    }

    #[test]
    fn members_are_fixed_points(v in vector(7..=7), k in 1usize..=7) {
        let sets = [
            ConstraintSet::L1Ball { radius: l1_norm(v.view()) + 1e-9 },
            ConstraintSet::KSparse { k: 7 },
            ConstraintSet::TreeSparse { k: 7, levels: 3 },
        ];
        for set in &sets {
            prop_assert!(set.contains(v.view(), 1e-12));
            prop_assert_eq!(&set.project(v.view()).unwrap(), &v);
        }
        let sparse = project_k_sparse(v.view(), k);
        let outside = sparse.iter().filter(|x| **x != 0.0).count() < v.iter().filter(|x| **x != 0.0).count();
        prop_assert_eq!(ConstraintSet::KSparse { k }.contains(v.view(), 1e-12), !outside);
    }

    #[test]
    fn convex_projections_are_nonexpansive(u in vector(6..=6), w in vector(6..=6), r in 0.1..4.0f64, mask in 0u32..64) {
        let sets = [
            ConstraintSet::L1Ball { radius: r },
            ConstraintSet::CoefficientSubset {
                basis: Transform::Dct { n: 6 },
                indices: (0..6).filter(|i| mask >> i & 1 == 1).collect(),
            },
        ];
        for set in &sets {
            let (pu, pw) = (set.project(u.view()).unwrap(), set.project(w.view()).unwrap());
            prop_assert!(common::dist(pu.view(), pw.view()) <= common::dist(u.view(), w.view()) + 1e-12);
        }
    }

    #[test]
    fn shrinkage_is_soft_thresholding(v in vector(1..=8), lambda in 0.0..3.0f64) {
        let s = proximal_l1(v.view(), lambda);
        for (a, b) in s.iter().zip(v.iter()) {
            let expected = b.signum() * (b.abs() - lambda).max(0.0);
            prop_assert!((a - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_operators_are_linear_and_idempotent(
        u in vector(15..=15), w in vector(15..=15), a in -3.0..3.0f64, b in -3.0..3.0f64,
        levels in 1usize..=4, mask in 0u32..(1 << 15),
    ) {
        for op in [InexactOperator::LevelTruncation { levels }, coefficient_subset(15, mask)] {
            prop_assert!(op.is_linear());
            let combo = &u * a + &w * b;
            let lhs = op.apply(combo.view(), 0).unwrap();
            let rhs = op.apply(u.view(), 0).unwrap() * a + op.apply(w.view(), 0).unwrap() * b;
            prop_assert!(common::dist(lhs.view(), rhs.view()) <= 1e-12 * (1.0 + norm(combo.view())));
            let once = op.apply(u.view(), 0).unwrap();
            let twice = op.apply(once.view(), 0).unwrap();
            prop_assert!(common::dist(once.view(), twice.view()) <= 1e-12 * (1.0 + norm(u.view())));
        }
        let neighborhood = InexactOperator::NeighborhoodDominant { window: 3 };
        prop_assert!(!neighborhood.is_linear());
    }

    #[test]
    fn convex_error_never_exceeds_sufficient_error(x in vector(8..=8), slack in 0.0..2.0f64, mask in 0u32..256) {
        prop_assume!(norm(x.view()) > 1e-6);
        let ball = ConstraintSet::L1Ball { radius: l1_norm(x.view()) + slack };
        for op in [coefficient_subset(8, mask), InexactOperator::NeighborhoodDominant { window: 2 }, InexactOperator::Identity] {
            let report = measure_epsilon(&op, &ball, x.view()).unwrap();
            prop_assert!(report.epsilon_convex <= report.epsilon_sufficient + 1e-12);
        }
        let report = measure_epsilon(&InexactOperator::Identity, &ball, x.view()).unwrap();
        prop_assert_eq!(report.epsilon_sufficient, 0.0);
        prop_assert_eq!(report.epsilon_convex, 0.0);
    }

    #[test]
    fn schedules_are_defined_everywhere(initial in 1usize..4, every in 1usize..6, t in 0usize..200) {
        let op = InexactOperator::growing_levels(initial, every, 7);
        let active = op.active(t);
        let expected_levels = initial + t / every;
        if expected_levels >= 7 {
            prop_assert_eq!(active, &InexactOperator::Identity);
        } else {
            prop_assert_eq!(active, &InexactOperator::LevelTruncation { levels: expected_levels });
        }
    }
}
