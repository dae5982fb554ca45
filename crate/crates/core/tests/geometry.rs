mod common;

use ipgd::geom::{
    evaluate_bound, mean_width_monte_carlo, rho_alternating, rho_brute_force, statistical_dimension_l1,
    statistical_dimension_l1_sparse, BoundParameters, ConeDescriptor, Theorem,
};
use ipgd::linalg::{gaussian_matrix, rng};
use ipgd::proj::InexactOperator;
use proptest::prelude::*;

fn within(a: f64, b: f64, stderr: f64) -> bool {
    (a - b).abs() <= 3.0 * stderr
}

#[test]
fn tree_width_is_below_sparse_width() {
    for k in [2, 4, 13] {
        let tree = mean_width_monte_carlo(&ConeDescriptor::TreeDifference { k, levels: 7 }, 4000, 3).unwrap();
        let sparse = mean_width_monte_carlo(&ConeDescriptor::SparseDifference { d: 127, k }, 4000, 3).unwrap();
        assert!(tree.value <= sparse.value + 3.0 * sparse.stderr.max(tree.stderr), "k = {k}");
    }
}

#[test]
fn tree_width_scales_like_root_k() {
    let w = mean_width_monte_carlo(&ConeDescriptor::TreeDifference { k: 13, levels: 7 }, 10_000, 0).unwrap();
    assert!(w.value <= 3.0 * (26.0f64).sqrt());
    assert!(!w.is_lower_bound);
}

#[test]
fn width_growth_with_dimension() {
    let levels = [5usize, 6, 7, 8];
    let est = |cone: ConeDescriptor| mean_width_monte_carlo(&cone, 10_000, 1).unwrap();
    let sparse: Vec<_> = levels
        .iter()
        .map(|&l| est(ConeDescriptor::SparseDifference { d: (1 << l) - 1, k: 4 }))
        .collect();
    let tree: Vec<_> = levels.iter().map(|&l| est(ConeDescriptor::TreeDifference { k: 4, levels: l })).collect();
    for w in sparse.windows(2) {
        assert!(w[1].value > w[0].value + 3.0 * (w[0].stderr + w[1].stderr));
    }
    let tree_steps: Vec<f64> = tree.windows(2).map(|w| w[1].value - w[0].value).collect();
    let sparse_steps: Vec<f64> = sparse.windows(2).map(|w| w[1].value - w[0].value).collect();
    assert!(tree_steps.windows(2).all(|s| s[1] < s[0]), "{tree_steps:?}");
    for (t, s) in tree_steps.iter().zip(&sparse_steps) {
        assert!(*t < 0.75 * s, "{tree_steps:?} vs {sparse_steps:?}");
    }
}

#[test]
fn width_at_half_sparsity_is_norm_of_gaussian() {
    let d = 20;
    let w = mean_width_monte_carlo(&ConeDescriptor::SparseDifference { d, k: d / 2 }, 10_000, 5).unwrap();
    // E‖g‖ for g ~ N(0, I_20), from the chi mean √2·Γ(10.5)/Γ(10)
    let chi_mean = 4.416_075_1;
    assert!(within(w.value, chi_mean, w.stderr), "{} vs {chi_mean}", w.value);
}

#[test]
fn statistical_dimension_of_full_support_is_dimension() {
    for d in [4, 16, 64] {
        let v = statistical_dimension_l1_sparse(d, d).unwrap().value;
        assert!((v * v - d as f64).abs() < 1e-6, "{v}");
    }
}

#[test]
fn statistical_dimension_matches_monte_carlo_of_the_same_expectation() {
    for (k, seed) in [(1, 0), (2, 1), (3, 2)] {
        let mut x = vec![0.0; 8];
        x[..k].iter_mut().enumerate().for_each(|(i, v)| *v = if i % 2 == 0 { 1.0 } else { -2.0 });
        let closed = statistical_dimension_l1(ndarray::ArrayView1::from(&x)).unwrap().value.powi(2);
        let (mc, se) = common::descent_cone_sq_width_oracle(&x, 40_000, seed);
        assert!(within(closed, mc, se.max(1e-3)), "k = {k}: {closed} vs {mc} ± {se}");
    }
}

#[test]
fn statistical_dimension_bounds_the_planar_cone() {
    // descent cone of ‖·‖₁ at (1, 0) is the quarter plane h₁ ≤ −|h₂|; project onto its rays
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut r = rand_chacha::ChaCha20Rng::seed_from_u64(9);
    let rays: Vec<(f64, f64)> = (0..=2000)
        .map(|i| {
            let a = 0.75 * std::f64::consts::PI + 0.5 * std::f64::consts::PI * i as f64 / 2000.0;
            (a.cos(), a.sin())
        })
        .collect();
    let n = 20_000;
    let vals: Vec<f64> = (0..n)
        .map(|_| {
            let (g1, g2): (f64, f64) = (StandardNormal.sample(&mut r), StandardNormal.sample(&mut r));
            rays.iter().map(|(c, s)| (g1 * c + g2 * s).max(0.0)).fold(0.0, f64::max).powi(2)
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let closed = statistical_dimension_l1(ndarray::array![1.0, 0.0].view()).unwrap().value.powi(2);
    // the quarter plane and its polar are congruent, so the exact value is d/2 = 1
    assert!((mean - 1.0).abs() < 0.05, "{mean}");
    assert!(closed >= mean);
}

#[test]
fn theorem_three_example() {
    let p = BoundParameters::new(0.0, 0.5, 1, 0.01, 1.0).unwrap();
    // 0.5³ + (1 − 0.5³)/(1 − 0.5)·(2 + 0.5)·0.01
    let expected = 0.125 + 1.75 * 0.025;
    assert!((evaluate_bound(Theorem::Ipgd, &p, 3).unwrap() - expected).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn alternating_agrees_with_brute_force(seed in any::<u64>(), m in 3usize..8, k in 1usize..=2) {
        let d = 8;
        let matrix = gaussian_matrix(&mut rng(seed, 1), m, d);
        let mu = 1.0 / m as f64;
        let cone = ConeDescriptor::SparseDifference { d, k };
        let exact = rho_brute_force(matrix.view(), &cone, mu, None).unwrap();
        let alt = rho_alternating(matrix.view(), &cone, mu, None, 100, seed).unwrap();
        prop_assert!(alt.value <= exact.value + 1e-9);
        prop_assert!((alt.value - exact.value).abs() <= 1e-6, "{} vs {}", alt.value, exact.value);
        prop_assert!(alt.is_lower_bound && !exact.is_lower_bound);
    }

    #[test]
    fn nested_sets_have_ordered_rates(seed in any::<u64>(), k in 1usize..=3, levels in 1usize..=3) {
        let matrix = gaussian_matrix(&mut rng(seed, 2), 5, 7);
        let mu = 0.2;
        let tree = ConeDescriptor::TreeDifference { k, levels: 3 };
        let sparse = ConeDescriptor::SparseDifference { d: 7, k };
        let rt = rho_brute_force(matrix.view(), &tree, mu, None).unwrap().value;
        let rs = rho_brute_force(matrix.view(), &sparse, mu, None).unwrap().value;
        prop_assert!(rt <= rs + 1e-9);
        let op = InexactOperator::LevelTruncation { levels };
        let rp = rho_brute_force(matrix.view(), &tree, mu, Some(&op)).unwrap().value;
        prop_assert!(rp <= rt + 1e-9);
        let ri = rho_brute_force(matrix.view(), &tree, mu, Some(&InexactOperator::Identity)).unwrap().value;
        prop_assert_eq!(ri, rt);
    }

    #[test]
    fn bounds_start_at_the_signal_norm(
        rho in 0.0..1.5f64, rho_p in 0.0..1.5f64, eps in 0.0..0.5f64, nx in 0.1..10.0f64, kappa in 1u8..=2,
    ) {
        let p = BoundParameters::new(rho, rho_p, kappa, eps, nx).unwrap();
        for n in 1..=4 {
            let th = Theorem::from_number(n).unwrap();
            prop_assert!((evaluate_bound(th, &p, 0).unwrap() - nx).abs() <= 1e-12 * nx);
        }
        let exact = BoundParameters::new(rho, rho, kappa, 0.0, nx).unwrap();
        for t in 0..20 {
            let a = evaluate_bound(Theorem::IpgdSet, &exact, t).unwrap();
            let b = evaluate_bound(Theorem::PgdSet, &exact, t).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * nx);
            let c = evaluate_bound(Theorem::Ipgd, &BoundParameters::new(rho, rho, 1, 0.0, nx).unwrap(), t).unwrap();
            let e = evaluate_bound(Theorem::Pgd, &BoundParameters::new(rho, rho, 1, 0.0, nx).unwrap(), t).unwrap();
            prop_assert!((c - e).abs() <= 1e-12 * nx);
        }
    }

    #[test]
    fn contracting_bounds_decrease(rho in 0.0..0.49f64, kappa in 1u8..=2, nx in 0.1..10.0f64) {
        let p = BoundParameters::new(rho, rho, kappa, 0.0, nx).unwrap();
        for th in [Theorem::Pgd, Theorem::PgdSet, Theorem::Ipgd, Theorem::IpgdSet] {
            let v: Vec<f64> = (0..40).map(|t| evaluate_bound(th, &p, t).unwrap()).collect();
            prop_assert!(v.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn monte_carlo_widths_are_seeded(seed in any::<u64>()) {
        let cone = ConeDescriptor::SparseDifference { d: 30, k: 3 };
        let a = mean_width_monte_carlo(&cone, 200, seed).unwrap();
        let b = mean_width_monte_carlo(&cone, 200, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.value >= 0.0 && a.stderr > 0.0);
    }
}
