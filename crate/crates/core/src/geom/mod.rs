//! Cone geometry: Gaussian widths, restricted convergence rates and the
//! resulting error bounds.

mod bound;
mod cone;
mod rho;
mod width;

pub use bound::{evaluate_bound, rate_width_relation, BoundParameters, RateWidth, Theorem};
pub use cone::{combinations, ConeDescriptor};
pub use rho::{restricted_operator, rho_alternating, rho_brute_force, RhoEstimate, RhoMethod, PAIR_LIMIT};
pub use width::{
    expected_soft_sq, l1_distance_bound, mean_width_monte_carlo, statistical_dimension_l1,
    statistical_dimension_l1_sparse, WidthEstimate, WidthMethod,
};

/// Minimizer of a unimodal `f` on `[lo, hi]` to interval width `tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
    }
    let mid = 0.5 * (lo + hi);
    // the endpoint can win when the minimum sits on the boundary
    [lo, mid, hi]
        .into_iter()
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap_or(mid)
}
