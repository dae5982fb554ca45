use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, param, Result};
use crate::linalg::{dist, l1_norm, norm};
use crate::model::{Transform, Tree};
use crate::proj::{self, ceil_log2};

/// Constraint set `K` together with its exact Euclidean projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConstraintSet {
    L1Ball { radius: f64 },
    KSparse { k: usize },
    /// Supports contained in a rooted subtree of at most `k` nodes of the
    /// complete binary tree with `levels` levels (`d = 2^levels − 1`).
    TreeSparse { k: usize, levels: usize },
    /// The span of the `indices` atoms of an orthonormal basis.
    CoefficientSubset { basis: Transform, indices: Vec<usize> },
}

impl ConstraintSet {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            ConstraintSet::L1Ball { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(param(format!("ℓ1 radius must be positive, got {radius}")));
                }
            }
            ConstraintSet::KSparse { k } => {
                if *k == 0 || *k > d {
                    return Err(param(format!("sparsity {k} outside 1..={d}")));
                }
            }
            ConstraintSet::TreeSparse { k, levels } => {
                let tree = Tree::new(*levels)?;
                check_len("tree-sparse dimension", tree.dim(), d)?;
                if *k == 0 || *k > d {
                    return Err(param(format!("sparsity {k} outside 1..={d}")));
                }
            }
            ConstraintSet::CoefficientSubset { basis, indices } => {
                basis.validate()?;
                if !basis.is_orthonormal() {
                    return Err(param("coefficient subset requires an orthonormal basis"));
                }
                check_len("coefficient subset basis", d, basis.input_dim())?;
                if indices.iter().any(|&i| i >= d) {
                    return Err(param("coefficient index out of range"));
                }
            }
        }
        Ok(())
    }

    pub fn project(&self, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        match self {
            ConstraintSet::L1Ball { radius } => Ok(proj::project_l1_ball(v, *radius)),
            ConstraintSet::KSparse { k } => Ok(proj::project_k_sparse(v, *k)),
            ConstraintSet::TreeSparse { k, levels } => {
                proj::project_tree_sparse(v, *k, &Tree::new(*levels)?)
            }
            ConstraintSet::CoefficientSubset { basis, indices } => {
                check_len("coefficient subset", basis.input_dim(), v.len())?;
                let c = basis.apply_unchecked(v);
                let mut kept = Array1::zeros(c.len());
                for &i in indices {
                    kept[i] = c[i];
                }
                Ok(basis.adjoint_unchecked(kept.view()))
            }
        }
    }

    /// Membership up to an absolute tolerance on the defining quantity.
    pub fn contains(&self, v: ArrayView1<f64>, tol: f64) -> bool {
        match self {
            ConstraintSet::L1Ball { radius } => l1_norm(v) <= radius + tol,
            ConstraintSet::KSparse { k } => v.iter().filter(|x| x.abs() > tol).count() <= *k,
            ConstraintSet::TreeSparse { k, levels } => {
                let Ok(tree) = Tree::new(*levels) else { return false };
                if v.len() != tree.dim() {
                    return false;
                }
                let support = (0..v.len()).filter(|&i| v[i].abs() > tol);
                tree.closure_size(support) <= *k
            }
            ConstraintSet::CoefficientSubset { .. } => match self.project(v) {
                Ok(p) => dist(p.view(), v) <= tol * norm(v).max(1.0),
                Err(_) => false,
            },
        }
    }

    pub fn is_convex(&self) -> bool {
        matches!(self, ConstraintSet::L1Ball { .. } | ConstraintSet::CoefficientSubset { .. })
    }

    /// 1 for convex sets, 2 otherwise.
    pub fn kappa(&self) -> u8 {
        if self.is_convex() {
            1
        } else {
            2
        }
    }

    /// Operation count of one projection in dimension `d`.
    pub fn cost(&self, d: usize) -> u64 {
        let d64 = d as u64;
        match self {
            ConstraintSet::L1Ball { .. } => d64 * ceil_log2(d) + 2 * d64,
            ConstraintSet::KSparse { .. } => d64 * ceil_log2(d) + d64,
            ConstraintSet::TreeSparse { k, .. } => {
                let k = (*k as u64).min(d64);
                d64 * (k + 1) * (k + 1) + d64
            }
            ConstraintSet::CoefficientSubset { basis, .. } => 2 * basis.cost() + d64,
        }
    }
}
