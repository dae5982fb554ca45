use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, param, Result};
use crate::model::Tree;
use crate::proj::top_k_indices;

/// Sets whose restricted geometry governs the convergence rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConeDescriptor {
    /// Tangent cone of `‖·‖₁` at `x`.
    L1DescentCone { x: Vec<f64> },
    /// `K − K` for `K` the `k`-sparse vectors: all `2k`-sparse vectors.
    SparseDifference { d: usize, k: usize },
    /// `K − K` for tree-sparse `K`: supports that are unions of two rooted
    /// subtrees with at most `k` nodes each.
    TreeDifference { k: usize, levels: usize },
    Subspace { d: usize, indices: Vec<usize> },
}

impl ConeDescriptor {
    pub fn dim(&self) -> usize {
        match self {
            ConeDescriptor::L1DescentCone { x } => x.len(),
            ConeDescriptor::SparseDifference { d, .. } | ConeDescriptor::Subspace { d, .. } => *d,
            ConeDescriptor::TreeDifference { levels, .. } => (1usize << levels) - 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConeDescriptor::L1DescentCone { x } => {
                if x.iter().all(|&v| v == 0.0) || x.iter().any(|v| !v.is_finite()) {
                    return Err(param("descent cone needs a nonzero finite reference signal"));
                }
            }
            ConeDescriptor::SparseDifference { d, k } => {
                if *k == 0 || *k > *d {
                    return Err(param(format!("sparsity {k} outside 1..={d}")));
                }
            }
            ConeDescriptor::TreeDifference { k, levels } => {
                let t = Tree::new(*levels)?;
                if *k == 0 || *k > t.dim() {
                    return Err(param(format!("sparsity {k} outside 1..={}", t.dim())));
                }
            }
            ConeDescriptor::Subspace { d, indices } => {
                if indices.iter().any(|&i| i >= *d) {
                    return Err(param("subspace index out of range"));
                }
            }
        }
        Ok(())
    }

    /// 1 when the set is convex, 2 otherwise.
    pub fn kappa(&self) -> u8 {
        match self {
            ConeDescriptor::L1DescentCone { .. } | ConeDescriptor::Subspace { .. } => 1,
            _ => 2,
        }
    }

    /// The vector `u` in the set maximizing `⟨w, u⟩ / ‖u‖`; the maximum is `‖u‖`.
    ///
    /// Exact for every kind: top-`2k` selection, the union-of-two-subtrees
    /// dynamic program, restriction, or the projection onto the tangent cone.
    pub fn best_direction(&self, w: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_len("cone direction", self.dim(), w.len())?;
        Ok(match self {
            ConeDescriptor::SparseDifference { d, k } => keep(w, &top_k_indices(w, (2 * k).min(*d))),
            ConeDescriptor::TreeDifference { k, levels } => {
                let weights: Vec<f64> = w.iter().map(|v| v * v).collect();
                keep(w, &Tree::new(*levels)?.best_union_of_two(&weights, *k).1)
            }
            ConeDescriptor::Subspace { indices, .. } => keep(w, indices),
            ConeDescriptor::L1DescentCone { x } => {
                let x = ArrayView1::from(x.as_slice());
                let tau = polar_tau(x, w);
                let polar = polar_point(x, w, tau);
                &w - &polar
            }
        })
    }

    /// Supports whose restricted vectors make up the set (all maximal ones).
    pub fn supports(&self) -> Result<Vec<Vec<usize>>> {
        self.validate()?;
        match self {
            ConeDescriptor::SparseDifference { d, k } => Ok(combinations(*d, (2 * k).min(*d))),
            ConeDescriptor::TreeDifference { k, levels } => {
                let tree = Tree::new(*levels)?;
                let subtrees = tree.rooted_subtrees(*k);
                let mut unions: Vec<Vec<usize>> = Vec::new();
                for (i, a) in subtrees.iter().enumerate() {
                    for b in &subtrees[i..] {
                        let mut u: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
                        u.sort_unstable();
                        u.dedup();
                        unions.push(u);
                    }
                }
                unions.sort();
                unions.dedup();
                // drop supports contained in another one
                let maximal = unions
                    .iter()
                    .filter(|s| !unions.iter().any(|t| t.len() > s.len() && is_subset(s, t)))
                    .cloned()
                    .collect();
                Ok(maximal)
            }
            ConeDescriptor::Subspace { indices, .. } => {
                let mut s = indices.clone();
                s.sort_unstable();
                s.dedup();
                Ok(vec![s])
            }
            ConeDescriptor::L1DescentCone { .. } => Err(crate::Error::UnsupportedCone(
                "the descent cone is not a finite union of subspaces",
            )),
        }
    }
}

fn keep(w: ArrayView1<f64>, idx: &[usize]) -> Array1<f64> {
    let mut out = Array1::zeros(w.len());
    for &i in idx {
        out[i] = w[i];
    }
    out
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

/// All `r`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if r > n {
        return out;
    }
    let mut c: Vec<usize> = (0..r).collect();
    loop {
        out.push(c.clone());
        let mut i = r;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if c[i] != i + n - r {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        c[i] += 1;
        for j in i + 1..r {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Minimizer over `τ ≥ 0` of `dist(w, τ∂‖x‖₁)`: the root of the piecewise
/// linear derivative `kτ − Σ_S sgn(x_i)w_i − Σ_{S^c} (|w_i| − τ)₊`.
fn polar_tau(x: ArrayView1<f64>, w: ArrayView1<f64>) -> f64 {
    let mut k = 0.0;
    let mut a = 0.0;
    let mut off: Vec<f64> = Vec::new();
    for (&xi, &wi) in x.iter().zip(w.iter()) {
        if xi != 0.0 {
            k += 1.0;
            a += xi.signum() * wi;
        } else {
            off.push(wi.abs());
        }
    }
    off.sort_by(|p, q| q.total_cmp(p));
    let mut cum = 0.0;
    for j in 0..=off.len() {
        if j > 0 {
            cum += off[j - 1];
        }
        let tau = (a + cum) / (k + j as f64);
        let upper = if j == 0 { f64::INFINITY } else { off[j - 1] };
        let lower = off.get(j).copied().unwrap_or(0.0);
        if tau >= lower && tau <= upper {
            return tau.max(0.0);
        }
    }
    0.0
}

/// Nearest point of `τ∂‖x‖₁` to `w`.
fn polar_point(x: ArrayView1<f64>, w: ArrayView1<f64>, tau: f64) -> Array1<f64> {
    Array1::from_shape_fn(w.len(), |i| {
        if x[i] != 0.0 {
            tau * x[i].signum()
        } else {
            w[i].clamp(-tau, tau)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(4, 4), vec![vec![0, 1, 2, 3]]);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn tree_difference_supports_are_unions_of_rooted_subtrees() {
        let cone = ConeDescriptor::TreeDifference { k: 2, levels: 3 };
        assert_eq!(cone.supports().unwrap(), vec![vec![0, 1, 2]]);
        let cone = ConeDescriptor::TreeDifference { k: 3, levels: 3 };
        let s = cone.supports().unwrap();
        assert!(s.contains(&vec![0, 1, 3, 4]));
        assert!(s.contains(&vec![0, 1, 2, 3, 6]));
        assert!(!s.iter().any(|u| u.len() > 5));
    }

    #[test]
    fn descent_cone_direction_is_feasible() {
        let x = vec![1.0, 0.0, -2.0, 0.0];
        let cone = ConeDescriptor::L1DescentCone { x: x.clone() };
        let w = array![0.3, 0.9, 0.2, -0.1];
        let u = cone.best_direction(w.view()).unwrap();
        // h is in the tangent cone iff Σ_S sgn(x_i) h_i + Σ_{S^c} |h_i| ≤ 0
        let lhs = u[0] - u[2] + u[1].abs() + u[3].abs();
        assert!(lhs <= 1e-9, "{lhs}");
        // residual is orthogonal to the projection
        assert!((&w - &u).dot(&u).abs() < 1e-9);
    }
}
