use ndarray::Array1;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, param, Result};
use crate::linalg::rng;
use crate::model::Tree;

/// How a signal was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SignalGenerator {
    TreeSparse {
        levels: usize,
        k: usize,
        top_levels: usize,
        sigma_top: f64,
        sigma_rest: f64,
        seed: u64,
    },
    ClusteredSparse {
        k: usize,
        min_spacing: usize,
        neighbor_offsets: Vec<i64>,
        sigma_neighbor: f64,
        seed: u64,
    },
    /// Transform coefficients of a DC-removed, unit-norm image patch.
    CoefficientDecay { patch: usize, seed: u64 },
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalInstance {
    pub x: Array1<f64>,
    pub d: usize,
    pub generator: SignalGenerator,
}

impl SignalInstance {
    pub fn new(x: Array1<f64>, generator: SignalGenerator) -> Self {
        let d = x.len();
        Self { x, d, generator }
    }

    pub fn custom(x: Array1<f64>) -> Self {
        Self::new(x, SignalGenerator::Custom)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.d).filter(|&i| self.x[i] != 0.0).collect()
    }

    pub fn seed(&self) -> Option<u64> {
        match &self.generator {
            SignalGenerator::TreeSparse { seed, .. }
            | SignalGenerator::ClusteredSparse { seed, .. }
            | SignalGenerator::CoefficientDecay { seed, .. } => Some(*seed),
            SignalGenerator::Custom => None,
        }
    }
}

fn normal(sigma: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sigma).map_err(|_| param(format!("invalid standard deviation {sigma}")))
}

/// Random rooted subtree of exactly `k` nodes grown by repeatedly adding a
/// uniformly chosen child of the current subtree.
pub fn random_rooted_subtree<R: Rng>(tree: &Tree, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    if k == 0 || k > tree.dim() {
        return Err(param(format!(
            "no rooted subtree of size {k} in a tree with {} nodes",
            tree.dim()
        )));
    }
    let mut support = vec![0];
    let mut frontier: Vec<usize> = tree.children(0).map(|(a, b)| vec![a, b]).unwrap_or_default();
    while support.len() < k {
        let node = frontier.swap_remove(rng.random_range(0..frontier.len()));
        support.push(node);
        if let Some((a, b)) = tree.children(node) {
            frontier.extend([a, b]);
        }
    }
    support.sort_unstable();
    Ok(support)
}

pub fn make_tree_signal(
    levels: usize,
    k: usize,
    top_levels: usize,
    sigma_top: f64,
    sigma_rest: f64,
    seed: u64,
) -> Result<SignalInstance> {
    let tree = Tree::new(levels)?;
    let top = normal(sigma_top)?;
    let rest = normal(sigma_rest)?;
    let mut r = rng(seed, 0);
    let support = random_rooted_subtree(&tree, k, &mut r)?;
    let mut x = Array1::zeros(tree.dim());
    for &i in &support {
        x[i] = if tree.depth(i) <= top_levels {
            top.sample(&mut r)
        } else {
            rest.sample(&mut r)
        };
    }
    Ok(SignalInstance::new(
        x,
        SignalGenerator::TreeSparse {
            levels,
            k,
            top_levels,
            sigma_top,
            sigma_rest,
            seed,
        },
    ))
}

/// `k` standard normal entries with pairwise index distance greater than
/// `min_spacing`, each with `N(0, sigma_neighbor²)` perturbations added at
/// the given offsets (offsets falling outside `0..d` are dropped).
///
/// Positions are uniform over all feasible placements: a sorted `k`-subset of
/// `0..d − (k−1)·min_spacing` is spread out by `i·min_spacing`.
pub fn make_clustered_sparse_signal(
    d: usize,
    k: usize,
    min_spacing: usize,
    neighbor_offsets: &[i64],
    sigma_neighbor: f64,
    seed: u64,
) -> Result<SignalInstance> {
    let reserved = k.saturating_sub(1) * min_spacing;
    if k == 0 || reserved + k > d {
        return Err(param(format!(
            "cannot place {k} entries more than {min_spacing} apart in dimension {d}"
        )));
    }
    let neighbor = normal(sigma_neighbor)?;
    let mut r = rng(seed, 0);
    let mut slots = sample(&mut r, d - reserved, k).into_vec();
    slots.sort_unstable();
    let positions: Vec<usize> = slots
        .iter()
        .enumerate()
        .map(|(i, s)| s + i * min_spacing)
        .collect();
    let mut x = Array1::zeros(d);
    for &p in &positions {
        x[p] += Normal::new(0.0, 1.0).unwrap().sample(&mut r);
    }
    if sigma_neighbor > 0.0 {
        for &p in &positions {
            for &o in neighbor_offsets {
                let v = neighbor.sample(&mut r);
                let j = p as i64 + o;
                if (0..d as i64).contains(&j) {
                    x[j as usize] += v;
                }
            }
        }
    }
    Ok(SignalInstance::new(
        x,
        SignalGenerator::ClusteredSparse {
            k,
            min_spacing,
            neighbor_offsets: neighbor_offsets.to_vec(),
            sigma_neighbor,
            seed,
        },
    ))
}

/// Positions of the dominant entries of a clustered signal, recomputed from
/// its generator.
pub fn clustered_positions(signal: &SignalInstance) -> Result<Vec<usize>> {
    let SignalGenerator::ClusteredSparse {
        k, min_spacing, seed, ..
    } = &signal.generator
    else {
        return Err(param("signal was not generated as clustered-sparse"));
    };
    let reserved = k.saturating_sub(1) * min_spacing;
    check_len("clustered signal", signal.d, signal.x.len())?;
    let mut r = rng(*seed, 0);
    let mut slots = sample(&mut r, signal.d - reserved, *k).into_vec();
    slots.sort_unstable();
    Ok(slots.iter().enumerate().map(|(i, s)| s + i * min_spacing).collect())
}
