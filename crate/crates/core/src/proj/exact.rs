//! Exact Euclidean projections and the ℓ1 proximal map.

use ndarray::{Array1, ArrayView1};

use crate::error::{check_len, Result};
use crate::linalg::l1_norm;
use crate::model::Tree;

/// Projection onto the ℓ1 ball of radius `radius` (sort-and-threshold).
///
/// Inputs already inside the ball are returned unchanged. A non-positive
/// radius collapses the ball to the origin.
pub fn project_l1_ball(v: ArrayView1<f64>, radius: f64) -> Array1<f64> {
    if radius <= 0.0 {
        return Array1::zeros(v.len());
    }
    if l1_norm(v) <= radius {
        return v.to_owned();
    }
    let theta = l1_threshold(v, radius);
    proximal_l1(v, theta)
}

/// Soft threshold `θ` such that `‖S(v, θ)‖₁ = radius`, assuming `‖v‖₁ > radius`.
pub(crate) fn l1_threshold(v: ArrayView1<f64>, radius: f64) -> f64 {
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - radius) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    theta.max(0.0)
}

/// Indices of the `k` largest magnitudes; ties go to the lower index.
pub(crate) fn top_k_indices(v: ArrayView1<f64>, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Hard thresholding: keeps the `k` largest-magnitude entries.
pub fn project_k_sparse(v: ArrayView1<f64>, k: usize) -> Array1<f64> {
    if k >= v.len() {
        return v.to_owned();
    }
    let mut out = Array1::zeros(v.len());
    for i in top_k_indices(v, k) {
        out[i] = v[i];
    }
    out
}

/// Exact projection onto vectors supported on a rooted subtree with at most `k` nodes.
pub fn project_tree_sparse(v: ArrayView1<f64>, k: usize, tree: &Tree) -> Result<Array1<f64>> {
    check_len("tree projection", tree.dim(), v.len())?;
    let energy: Vec<f64> = v.iter().map(|x| x * x).collect();
    let (_, support) = tree.best_rooted_subtree(&energy, k);
    let mut out = Array1::zeros(v.len());
    for i in support {
        out[i] = v[i];
    }
    Ok(out)
}

/// Element-wise shrinkage `sgn(v)·max(0, |v| − λ)`.
pub fn proximal_l1(v: ArrayView1<f64>, lambda: f64) -> Array1<f64> {
    v.mapv(|x| soft(x, lambda))
}

#[inline]
pub(crate) fn soft(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn l1_ball_examples() {
        assert_eq!(project_l1_ball(array![3.0, 0.0].view(), 1.0), array![1.0, 0.0]);
        assert_eq!(project_l1_ball(array![2.0, 1.0].view(), 1.0), array![1.0, 0.0]);
        let inside = array![0.2, -0.3];
        assert_eq!(project_l1_ball(inside.view(), 1.0), inside);
    }

    #[test]
    fn l1_ball_lands_on_boundary() {
        let v = array![0.9, -0.7, 0.3, 0.05];
        let p = project_l1_ball(v.view(), 1.0);
        assert!((l1_norm(p.view()) - 1.0).abs() < 1e-12);
        assert!(p[0] > 0.0 && p[1] < 0.0);
    }

    #[test]
    fn hard_threshold_examples() {
        assert_eq!(project_k_sparse(array![3.0, -5.0, 2.0].view(), 1), array![0.0, -5.0, 0.0]);
        assert_eq!(project_k_sparse(array![1.0, 1.0].view(), 1), array![1.0, 0.0]);
        let v = array![1.0, -2.0];
        assert_eq!(project_k_sparse(v.view(), 2), v);
    }

    #[test]
    fn tree_projection_examples() {
        let tree = Tree::new(3).unwrap();
        // energy at the root and at heap node 3 (index 2)
        let v = array![2.0, 0.1, 1.5, 0.3, 0.2, 0.0, 0.4];
        let p = project_tree_sparse(v.view(), 2, &tree).unwrap();
        assert_eq!(p, array![2.0, 0.0, 1.5, 0.0, 0.0, 0.0, 0.0]);

        let full = project_tree_sparse(v.view(), 7, &tree).unwrap();
        assert_eq!(full, v);

        let deep = array![0.0, 0.0, 0.0, 5.0, 5.0, 5.0, 5.0];
        let p1 = project_tree_sparse(deep.view(), 1, &tree).unwrap();
        assert!(p1.iter().all(|&x| x == 0.0));

        assert!(project_tree_sparse(array![1.0, 2.0].view(), 1, &tree).is_err());
    }

    #[test]
    fn shrinkage_examples() {
        assert_eq!(proximal_l1(array![2.0, -0.5].view(), 1.0), array![1.0, 0.0]);
        assert_eq!(proximal_l1(array![-3.0].view(), 1.0), array![-2.0]);
        let v = array![0.3, -1.2];
        assert_eq!(proximal_l1(v.view(), 0.0), v);
    }
}
