use ndarray::ArrayView1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{param, Error, Result};
use crate::geom::{golden_section, ConeDescriptor};
use crate::linalg::{gaussian_vector, rng};
use crate::model::Tree;
use crate::proj::top_k_indices;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WidthMethod {
    ClosedForm,
    MonteCarlo,
    /// Monte Carlo over a superset of the cone; the value is an upper bound.
    MonteCarloRelaxation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub method: WidthMethod,
    pub is_lower_bound: bool,
}

/// `sup ⟨g, v⟩` over the set intersected with the unit ball, for one draw.
fn sup_for(cone: &ConeDescriptor, tree: Option<&Tree>, g: ArrayView1<f64>) -> f64 {
    match cone {
        ConeDescriptor::SparseDifference { d, k } => {
            top_k_indices(g, (2 * k).min(*d)).iter().map(|&i| g[i] * g[i]).sum::<f64>().sqrt()
        }
        ConeDescriptor::TreeDifference { k, .. } => {
            // one rooted subtree of 2k nodes contains every union of two k-node subtrees
            let w: Vec<f64> = g.iter().map(|v| v * v).collect();
            tree.expect("tree built for tree cones").best_rooted_subtree(&w, 2 * k).0.sqrt()
        }
        ConeDescriptor::Subspace { indices, .. } => indices.iter().map(|&i| g[i] * g[i]).sum::<f64>().sqrt(),
        ConeDescriptor::L1DescentCone { .. } => unreachable!(),
    }
}

/// Monte Carlo Gaussian mean width `E sup_{v ∈ Υ ∩ B} ⟨g, v⟩`.
///
/// Draw `i` uses the generator stream `(seed, i)`, so the estimate does not
/// depend on thread scheduling. Tree differences use the single-subtree
/// relaxation with budget `2k` and report `MonteCarloRelaxation`.
pub fn mean_width_monte_carlo(cone: &ConeDescriptor, samples: usize, seed: u64) -> Result<WidthEstimate> {
    cone.validate()?;
    if samples == 0 {
        return Err(param("at least one sample is required"));
    }
    if let ConeDescriptor::L1DescentCone { .. } = cone {
        return Err(Error::UnsupportedCone(
            "use statistical_dimension_l1 for the ℓ1 descent cone",
        ));
    }
    let tree = match cone {
        ConeDescriptor::TreeDifference { levels, .. } => Some(Tree::new(*levels)?),
        _ => None,
    };
    let d = cone.dim();
    let draws: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let g = gaussian_vector(&mut rng(seed, i as u64), d);
            sup_for(cone, tree.as_ref(), g.view())
        })
        .collect();
    let n = samples as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = if samples > 1 {
        draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(WidthEstimate {
        value: mean,
        stderr: (var / n).sqrt(),
        samples,
        method: if tree.is_some() {
            WidthMethod::MonteCarloRelaxation
        } else {
            WidthMethod::MonteCarlo
        },
        is_lower_bound: false,
    })
}

fn phi(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Upper tail `P(g > t)`.
fn upper_tail(t: f64) -> f64 {
    0.5 * erfc(t / std::f64::consts::SQRT_2)
}

/// `E[soft(g, τ)²]` for `g ~ N(0, 1)`.
pub fn expected_soft_sq(tau: f64) -> f64 {
    2.0 * ((1.0 + tau * tau) * upper_tail(tau) - tau * phi(tau))
}

/// `k(1 + τ²) + (d − k)·E[soft(g, τ)²]`
pub fn l1_distance_bound(k: usize, d: usize, tau: f64) -> f64 {
    k as f64 * (1.0 + tau * tau) + (d - k) as f64 * expected_soft_sq(tau)
}

/// Squared-width proxy of the ℓ1 descent cone at `x`:
/// `min_τ E dist²(g, τ∂‖x‖₁)`, returned as its square root.
pub fn statistical_dimension_l1(x: ArrayView1<f64>) -> Result<WidthEstimate> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(param("signal has non-finite entries"));
    }
    let d = x.len();
    let k = x.iter().filter(|&&v| v != 0.0).count();
    if k == 0 {
        return Err(param("signal has no nonzero entries"));
    }
    let hi = (2.0 * (d as f64).ln()).sqrt() + 6.0;
    let tau = golden_section(|t| l1_distance_bound(k, d, t), 0.0, hi, 1e-8);
    Ok(WidthEstimate {
        value: l1_distance_bound(k, d, tau).sqrt(),
        stderr: 0.0,
        samples: 0,
        method: WidthMethod::ClosedForm,
        is_lower_bound: false,
    })
}

/// Width of the descent cone of a `k`-sparse signal in `R^d`.
pub fn statistical_dimension_l1_sparse(k: usize, d: usize) -> Result<WidthEstimate> {
    if k == 0 || k > d {
        return Err(param(format!("sparsity {k} outside 1..={d}")));
    }
    let mut x = ndarray::Array1::zeros(d);
    x.slice_mut(ndarray::s![..k]).fill(1.0);
    statistical_dimension_l1(x.view())
}
