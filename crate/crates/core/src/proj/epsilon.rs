//! Model error ε of an inexact operator relative to a signal.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::linalg::{dist, gaussian_vector, norm, rng};
use crate::model::ConstraintSet;
use crate::proj::InexactOperator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    /// `P_K(p(x))`
    pub output: Vec<f64>,
    /// `‖x − P_K(p(x))‖ / ‖x‖`
    pub epsilon_convex: f64,
    /// `‖x − p(x)‖ / ‖x‖`
    pub epsilon_sufficient: f64,
}

/// Both convex-set model errors of `p` at `x`; scheduled operators are
/// evaluated at their first stage.
pub fn measure_epsilon(
    p: &InexactOperator,
    set: &ConstraintSet,
    x: ArrayView1<f64>,
) -> Result<ProjectionReport> {
    let nx = norm(x);
    if nx == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let px = p.apply(x, 0)?;
    let projected = set.project(px.view())?;
    Ok(ProjectionReport {
        epsilon_convex: dist(x, projected.view()) / nx,
        epsilon_sufficient: dist(x, px.view()) / nx,
        output: projected.to_vec(),
    })
}

/// Sampled estimate of the nonconvex model error
/// `sup_v ‖P_K(pv − px) − P_K(pv − x)‖ / ‖x‖`.
///
/// The supremum runs over all of `R^d`, so the value returned is a lower
/// bound: the maximum over `v = 0`, `v = ±x`, `v = 2x` and `probes` draws of
/// `v ~ N(0, I)` (half of them rescaled to `‖x‖`).
pub fn measure_epsilon_nonconvex(
    p: &InexactOperator,
    set: &ConstraintSet,
    x: ArrayView1<f64>,
    probes: usize,
    seed: u64,
) -> Result<f64> {
    if probes == 0 {
        return Err(param("at least one probe is required"));
    }
    let nx = norm(x);
    if nx == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let d = x.len();
    let px = p.apply(x, 0)?;
    let gap = |v: &Array1<f64>| -> Result<f64> {
        let pv = p.apply(v.view(), 0)?;
        let a = set.project((&pv - &px).view())?;
        let b = set.project((&pv - &x).view())?;
        Ok(dist(a.view(), b.view()) / nx)
    };
    let mut best: f64 = 0.0;
    for scale in [0.0, 1.0, -1.0, 2.0] {
        best = best.max(gap(&(x.to_owned() * scale))?);
    }
    let mut r = rng(seed, 0);
    for i in 0..probes {
        let mut v = gaussian_vector(&mut r, d);
        if i % 2 == 1 {
            let nv = norm(v.view());
            if nv > 0.0 {
                v *= nx / nv;
            }
        }
        best = best.max(gap(&v)?);
    }
    Ok(best)
}

/// Exact nonconvex model error for a coordinate subset `p` (keep `indices`)
/// followed by hard thresholding to `k` entries.
///
/// Write `δ = x − p(x)` with magnitudes sorted decreasingly, `r = min(|S|, k)`
/// and `f = k − r` free slots. Choosing `pv` with `r` entries of which `j` are
/// displaced by the `q = f + j` largest entries of `δ` gives
/// `‖·‖² = j·δ_(q)² + Σ_{i≤q} δ_(i)²`; the supremum is the maximum over `q`.
pub fn epsilon_coordinate_subset_k_sparse(
    indices: &[usize],
    k: usize,
    x: ArrayView1<f64>,
) -> Result<f64> {
    let nx = norm(x);
    if nx == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let d = x.len();
    let mut keep = vec![false; d];
    for &i in indices {
        if i >= d {
            return Err(param(format!("coordinate index {i} out of range for dimension {d}")));
        }
        keep[i] = true;
    }
    let mut delta: Vec<f64> = (0..d).filter(|&i| !keep[i]).map(|i| x[i].abs()).collect();
    delta.sort_by(|a, b| b.total_cmp(a));
    let kept = keep.iter().filter(|&&b| b).count();
    let r = kept.min(k);
    let free = k - r;
    let at = |i: usize| delta.get(i).copied().unwrap_or(0.0);
    let mut best: f64 = 0.0;
    let mut cum = 0.0;
    for q in 1..=k {
        cum += at(q - 1).powi(2);
        if q < free {
            continue;
        }
        let j = (q - free) as f64;
        best = best.max(j * at(q - 1).powi(2) + cum);
    }
    Ok(best.sqrt() / nx)
}
