//! Small dense helpers shared by the solvers and estimators.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Deterministic generator for `(seed, stream)`.
///
/// Independent streams are used for per-draw and per-trial randomness so the
/// result of a parallel loop does not depend on scheduling.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian_vector<R: rand::Rng>(rng: &mut R, n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| StandardNormal.sample(rng))
}

pub fn gaussian_matrix<R: rand::Rng>(rng: &mut R, rows: usize, cols: usize) -> Array2<f64> {
    // row-major fill order is part of the reproducibility contract
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(rng))
}

pub fn norm(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

pub fn dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn l1_norm(v: ArrayView1<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Largest singular value via nalgebra's SVD. Intended for small blocks.
pub fn spectral_norm_exact(a: ArrayView2<f64>) -> f64 {
    let (r, c) = a.dim();
    if r == 0 || c == 0 {
        return 0.0;
    }
    let m = DMatrix::from_fn(r, c, |i, j| a[[i, j]]);
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Largest singular value by power iteration on `AᵀA`.
pub fn spectral_norm(a: ArrayView2<f64>, iterations: usize) -> f64 {
    let (_, c) = a.dim();
    if c == 0 {
        return 0.0;
    }
    let mut v = Array1::from_elem(c, 1.0 / (c as f64).sqrt());
    // a deterministic but non-symmetric start avoids orthogonality to the top vector
    for (i, vi) in v.iter_mut().enumerate() {
        *vi *= 1.0 + 0.01 * ((i % 7) as f64);
    }
    let mut sigma = 0.0;
    for _ in 0..iterations {
        let w = a.t().dot(&a.dot(&v));
        let n = norm(w.view());
        if n == 0.0 {
            return 0.0;
        }
        let next = n.sqrt();
        v = w / n;
        if (next - sigma).abs() <= 1e-13 * next {
            sigma = next;
            break;
        }
        sigma = next;
    }
    sigma
}

/// Dense matrix of a linear map given by its action on vectors.
pub fn matrix_of(d: usize, mut f: impl FnMut(&Array1<f64>) -> Array1<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((d, d));
    let mut e = Array1::zeros(d);
    for j in 0..d {
        e[j] = 1.0;
        let col = f(&e);
        out.column_mut(j).assign(&col);
        e[j] = 0.0;
    }
    out
}
