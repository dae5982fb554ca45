//! Mean-width estimates over grids of dimensions and sparsities.

use serde::{Deserialize, Serialize};

use super::{sub_seed, OutputSet};
use crate::error::Result;
use crate::geom::{mean_width_monte_carlo, statistical_dimension_l1_sparse, ConeDescriptor, WidthEstimate, WidthMethod};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WidthTableParams {
    pub dims: Vec<usize>,
    pub ks: Vec<usize>,
    /// Tree depths; the tree dimension is `2^levels − 1`.
    pub tree_levels: Vec<usize>,
    pub samples: usize,
}

impl Default for WidthTableParams {
    fn default() -> Self {
        Self {
            dims: vec![32, 64, 128, 256],
            ks: vec![2, 4, 8],
            tree_levels: vec![5, 6, 7, 8],
            samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthRow {
    pub set: String,
    pub d: usize,
    pub k: usize,
    pub estimate: WidthEstimate,
}

/// Sparse-difference and ℓ1 descent-cone rows for every `(d, k)` with
/// `2k ≤ d`, then tree-difference rows for every depth and `k`.
pub fn width_rows(p: &WidthTableParams, seed: u64) -> Result<Vec<WidthRow>> {
    let mut rows = Vec::new();
    let mut cell = 0u64;
    for &d in &p.dims {
        for &k in p.ks.iter().filter(|&&k| k >= 1 && 2 * k <= d) {
            let cone = ConeDescriptor::SparseDifference { d, k };
            rows.push(WidthRow {
                set: "sparse-difference".into(),
                d,
                k,
                estimate: mean_width_monte_carlo(&cone, p.samples, sub_seed(seed, cell))?,
            });
            cell += 1;
            rows.push(WidthRow {
                set: "l1-descent".into(),
                d,
                k,
                estimate: statistical_dimension_l1_sparse(k, d)?,
            });
        }
    }
    for &levels in &p.tree_levels {
        let d = (1usize << levels) - 1;
        for &k in p.ks.iter().filter(|&&k| k >= 1 && 2 * k <= d) {
            let cone = ConeDescriptor::TreeDifference { k, levels };
            rows.push(WidthRow {
                set: "tree-difference".into(),
                d,
                k,
                estimate: mean_width_monte_carlo(&cone, p.samples, sub_seed(seed, cell))?,
            });
            cell += 1;
        }
    }
    Ok(rows)
}

fn method_name(m: WidthMethod) -> &'static str {
    match m {
        WidthMethod::ClosedForm => "closed-form",
        WidthMethod::MonteCarlo => "monte-carlo",
        WidthMethod::MonteCarloRelaxation => "monte-carlo-relaxation",
    }
}

pub(super) fn write(p: &WidthTableParams, seed: u64, files: &mut OutputSet) -> Result<()> {
    let mut csv = String::from("set,d,k,value,stderr,samples,method\n");
    for r in width_rows(p, seed)? {
        let e = &r.estimate;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.set,
            r.d,
            r.k,
            e.value,
            e.stderr,
            e.samples,
            method_name(e.method)
        ));
    }
    files.write("width_table.csv", &csv)
}
