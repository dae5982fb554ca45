//! Independent brute-force references shared by the integration tests.
#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView1};

pub fn dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Projection onto `{‖z‖₁ ≤ R}` by enumerating the faces of the cross-polytope.
///
/// The minimizer keeps the signs of `v`, so for every support `S` the
/// candidate is the projection of `v_S` onto `Σ sᵢzᵢ = R`, kept when all its
/// entries stay sign-consistent.
pub fn brute_l1_ball(v: ArrayView1<f64>, radius: f64) -> Array1<f64> {
    let d = v.len();
    if v.iter().map(|x| x.abs()).sum::<f64>() <= radius {
        return v.to_owned();
    }
    let mut best = (f64::INFINITY, Array1::zeros(d));
    for mask in 1u32..(1 << d) {
        let idx: Vec<usize> = (0..d).filter(|i| mask >> i & 1 == 1).collect();
        let theta = (idx.iter().map(|&i| v[i].abs()).sum::<f64>() - radius) / idx.len() as f64;
        if idx.iter().any(|&i| v[i].abs() - theta < 0.0) {
            continue;
        }
        let mut z = Array1::zeros(d);
        for &i in &idx {
            z[i] = v[i].signum() * (v[i].abs() - theta);
        }
        let e = dist(v, z.view());
        if e < best.0 {
            best = (e, z);
        }
    }
    best.1
}

fn restrict(v: ArrayView1<f64>, support: impl Iterator<Item = usize>) -> Array1<f64> {
    let mut z = Array1::zeros(v.len());
    for i in support {
        z[i] = v[i];
    }
    z
}

/// Best restriction of `v` to any of the `supports` (bitmasks), earliest on ties.
fn best_restriction(v: ArrayView1<f64>, supports: impl Iterator<Item = u32>) -> Array1<f64> {
    let d = v.len();
    let mut best = (f64::INFINITY, Array1::zeros(d));
    for mask in supports {
        let z = restrict(v, (0..d).filter(|i| mask >> i & 1 == 1));
        let e = dist(v, z.view());
        if e < best.0 {
            best = (e, z);
        }
    }
    best.1
}

/// Projection onto the `k`-sparse vectors over all `C(d, k)` supports.
pub fn brute_k_sparse(v: ArrayView1<f64>, k: usize) -> Array1<f64> {
    let d = v.len();
    best_restriction(v, (0u32..1 << d).filter(|m| m.count_ones() as usize == k))
}

/// Heap-ordered node sets (bit `i` = node `i + 1`) closed under parents.
pub fn rooted_masks(levels: usize, max_size: usize) -> Vec<u32> {
    let d = (1usize << levels) - 1;
    (1u32..1 << d)
        .filter(|&m| m & 1 == 1 && m.count_ones() as usize <= max_size)
        .filter(|&m| (1..d).all(|i| m >> i & 1 == 0 || m >> ((i + 1) / 2 - 1) & 1 == 1))
        .collect()
}

/// Projection onto vectors supported on a rooted subtree of at most `k` nodes.
pub fn brute_tree(v: ArrayView1<f64>, k: usize, levels: usize) -> Array1<f64> {
    best_restriction(v, rooted_masks(levels, k).into_iter())
}

/// `M x` with `M` given row-major.
pub fn matvec(m: &Array2<f64>, x: &Array1<f64>) -> Array1<f64> {
    Array1::from_iter(m.rows().into_iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()))
}

/// `dist²(g, τ∂‖x‖₁)` from the definition of the subdifferential.
fn subdifferential_dist_sq(g: &[f64], x: &[f64], tau: f64) -> f64 {
    g.iter()
        .zip(x)
        .map(|(&gi, &xi)| {
            if xi != 0.0 {
                (gi - tau * xi.signum()).powi(2)
            } else {
                (gi.abs() - tau).max(0.0).powi(2)
            }
        })
        .sum()
}

/// Monte Carlo `min_τ (1/N) Σ dist²(gᵢ, τ∂‖x‖₁)` over a τ grid refined by
/// ternary search, with the standard error of the mean at the minimizer.
pub fn descent_cone_sq_width_oracle(x: &[f64], samples: usize, seed: u64) -> (f64, f64) {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut r = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let d = x.len();
    let draws: Vec<Vec<f64>> = (0..samples)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut r)).collect())
        .collect();
    let mean_at = |tau: f64| draws.iter().map(|g| subdifferential_dist_sq(g, x, tau)).sum::<f64>() / samples as f64;
    let grid: Vec<f64> = (0..=800).map(|i| i as f64 * 0.01).collect();
    let start = grid
        .iter()
        .copied()
        .min_by(|a, b| mean_at(*a).total_cmp(&mean_at(*b)))
        .unwrap();
    let (mut lo, mut hi) = ((start - 0.01).max(0.0), start + 0.01);
    for _ in 0..100 {
        let (a, b) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if mean_at(a) < mean_at(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let tau = (lo + hi) / 2.0;
    let values: Vec<f64> = draws.iter().map(|g| subdifferential_dist_sq(g, x, tau)).collect();
    let mean = values.iter().sum::<f64>() / samples as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    (mean, (var / samples as f64).sqrt())
}

/// Largest entrywise relative error between backward and central differences
/// of `⟨c, z_T⟩` over every `A`, `U` entry and the threshold, or `None` when
/// a pre-activation lies within `margin` of the threshold.
pub fn gradient_check(net: &ipgd::learn::UnrolledNetwork, y: &Array1<f64>, c: &Array1<f64>, h: f64, margin: f64) -> Option<f64> {
    use ipgd::learn::Nonlinearity;
    let fwd = net.forward(y.view()).unwrap();
    let Nonlinearity::SoftThreshold { lambda } = net.nonlinearity else {
        panic!("check covers the soft threshold");
    };
    if fwd.pre.iter().flatten().any(|v| (v.abs() - lambda).abs() < margin) {
        return None;
    }
    let grads = net.backward(y.view(), &fwd, c.view()).unwrap();
    let loss = |n: &ipgd::learn::UnrolledNetwork| n.output(y.view()).unwrap().dot(c);
    let central = |f: &dyn Fn(&mut ipgd::learn::UnrolledNetwork, f64)| {
        let (mut plus, mut minus) = (net.clone(), net.clone());
        f(&mut plus, h);
        f(&mut minus, -h);
        (loss(&plus) - loss(&minus)) / (2.0 * h)
    };
    let rel = |analytic: f64, numeric: f64| (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
    let mut worst: f64 = 0.0;
    for ((i, j), &g) in grads.a.indexed_iter() {
        worst = worst.max(rel(g, central(&|n, s| n.a[[i, j]] += s)));
    }
    for ((i, j), &g) in grads.u.indexed_iter() {
        worst = worst.max(rel(g, central(&|n, s| n.u[[i, j]] += s)));
    }
    let dl = central(&|n, s| {
        if let Nonlinearity::SoftThreshold { lambda } = &mut n.nonlinearity {
            *lambda += s;
        }
    });
    Some(worst.max(rel(grads.lambda, dl)))
}
