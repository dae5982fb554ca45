use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, param, Error, Result};
use crate::geom::ConeDescriptor;
use crate::linalg::{gaussian_vector, matrix_of, norm, rng};
use crate::proj::InexactOperator;

/// Largest number of support pairs `rho_brute_force` will enumerate.
pub const PAIR_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoMethod {
    BruteForce,
    AlternatingMaximization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoEstimate {
    pub value: f64,
    pub method: RhoMethod,
    pub kappa: u8,
    pub is_lower_bound: bool,
}

/// `I − μMᵀM`, or `Pᵀ(I − μMᵀM)P` for a linear pre-operator `p`.
pub fn restricted_operator(
    matrix: ArrayView2<f64>,
    mu: f64,
    p: Option<&InexactOperator>,
) -> Result<Array2<f64>> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(param(format!("step size must be nonnegative, got {mu}")));
    }
    let d = matrix.ncols();
    let g = Array2::eye(d) - matrix.t().dot(&matrix) * mu;
    let Some(p) = p else { return Ok(g) };
    p.validate(d)?;
    if !p.is_linear() {
        return Err(param("the restricted rate needs a linear operator"));
    }
    let pm = matrix_of(d, |e| p.apply(e.view(), 0).expect("validated operator"));
    Ok(pm.t().dot(&g).dot(&pm))
}

fn block_norm(h: &Array2<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    if rows.is_empty() || cols.is_empty() {
        return 0.0;
    }
    let b = DMatrix::from_fn(rows.len(), cols.len(), |i, j| h[[rows[i], cols[j]]]);
    b.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Exact `sup_{u,v ∈ (K−K) ∩ B} p(u)ᵀ(I − μMᵀM)p(v)`: the largest spectral
/// norm of a support-pair block.
pub fn rho_brute_force(
    matrix: ArrayView2<f64>,
    cone: &ConeDescriptor,
    mu: f64,
    p: Option<&InexactOperator>,
) -> Result<RhoEstimate> {
    check_len("cone dimension", cone.dim(), matrix.ncols())?;
    if let ConeDescriptor::L1DescentCone { .. } = cone {
        return Err(Error::UnsupportedCone("the descent cone has no finite support enumeration"));
    }
    let count = support_count(cone)?;
    let pairs = count * count;
    if pairs > PAIR_LIMIT {
        return Err(Error::EnumerationTooLarge {
            count: pairs,
            limit: PAIR_LIMIT,
        });
    }
    let supports = cone.supports()?;
    let h = restricted_operator(matrix, mu, p)?;
    let symmetric = h.iter().zip(h.t().iter()).all(|(a, b)| a == b);
    let value = (0..supports.len())
        .into_par_iter()
        .map(|i| {
            let from = if symmetric { i } else { 0 };
            supports[from..]
                .iter()
                .map(|s| block_norm(&h, &supports[i], s))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(RhoEstimate {
        value,
        method: RhoMethod::BruteForce,
        kappa: cone.kappa(),
        is_lower_bound: false,
    })
}

fn binomial(n: usize, r: usize) -> u128 {
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn support_count(cone: &ConeDescriptor) -> Result<u128> {
    cone.validate()?;
    Ok(match cone {
        ConeDescriptor::SparseDifference { d, k } => binomial(*d, (2 * k).min(*d)),
        ConeDescriptor::Subspace { .. } => 1,
        ConeDescriptor::TreeDifference { levels, .. } if *levels > 5 => u128::MAX >> 1,
        ConeDescriptor::TreeDifference { .. } => cone.supports()?.len() as u128,
        ConeDescriptor::L1DescentCone { .. } => u128::MAX >> 1,
    })
}

/// Alternating maximization of `uᵀHv` over the set, from every coordinate
/// vector and `restarts` Gaussian starts. Each half-step is solved exactly by
/// the set's best-direction oracle, so the value is attained and is a lower
/// bound on the supremum.
pub fn rho_alternating(
    matrix: ArrayView2<f64>,
    cone: &ConeDescriptor,
    mu: f64,
    p: Option<&InexactOperator>,
    restarts: usize,
    seed: u64,
) -> Result<RhoEstimate> {
    check_len("cone dimension", cone.dim(), matrix.ncols())?;
    cone.validate()?;
    let d = matrix.ncols();
    let h = restricted_operator(matrix, mu, p)?;
    let ht = h.t().to_owned();
    let mut starts: Vec<Array1<f64>> = (0..d)
        .map(|i| {
            let mut e = Array1::zeros(d);
            e[i] = 1.0;
            e
        })
        .collect();
    starts.extend((0..restarts).map(|i| gaussian_vector(&mut rng(seed, i as u64), d)));
    let climb = |start: &Array1<f64>| -> Result<f64> {
        let mut v = cone.best_direction(start.view())?;
        let nv = norm(v.view());
        if nv == 0.0 {
            return Ok(0.0);
        }
        v /= nv;
        let mut best = 0.0f64;
        for _ in 0..2000 {
            let u = cone.best_direction(h.dot(&v).view())?;
            let nu = norm(u.view());
            if nu == 0.0 {
                break;
            }
            let u = u / nu;
            let next = cone.best_direction(ht.dot(&u).view())?;
            let value = norm(next.view());
            if value == 0.0 {
                break;
            }
            v = next / value;
            if value <= best * (1.0 + 1e-15) {
                best = best.max(value);
                break;
            }
            best = value;
        }
        Ok(best)
    };
    let values: Vec<f64> = starts.par_iter().map(climb).collect::<Result<_>>()?;
    Ok(RhoEstimate {
        value: values.into_iter().fold(0.0, f64::max),
        method: RhoMethod::AlternatingMaximization,
        kappa: cone.kappa(),
        is_lower_bound: true,
    })
}
