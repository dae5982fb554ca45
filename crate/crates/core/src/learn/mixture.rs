use ndarray::{Array1, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::learn::{objective, train, Dataset, TrainingConfig, UnrolledNetwork};
use crate::linalg::spectral_norm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MixtureConfig {
    pub networks: usize,
    pub refinement_rounds: usize,
    /// Weight of `‖z‖₁` in the assignment objective `‖y − Mz‖² + λ‖z‖₁`.
    pub lambda: f64,
    /// ISTA iterations defining the per-sample reference objective.
    pub reference_iterations: usize,
    pub training: TrainingConfig,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        Self {
            networks: 6,
            refinement_rounds: 5,
            lambda: 0.1,
            reference_iterations: 1000,
            training: TrainingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    pub networks: Vec<UnrolledNetwork>,
    pub lambda: f64,
}

impl MixtureModel {
    /// Objective of every network on `y`.
    pub fn objectives(&self, data: &Dataset, y: ArrayView1<f64>) -> Result<Vec<f64>> {
        self.networks
            .iter()
            .map(|n| Ok(objective(data.matrix.view(), y, n.output(y)?.view(), self.lambda)))
            .collect()
    }

    /// Network with the smallest objective on `y` (lowest index on ties) and its value.
    pub fn assign(&self, data: &Dataset, y: ArrayView1<f64>) -> Result<(usize, f64)> {
        let objs = self.objectives(data, y)?;
        Ok(argmin(&objs))
    }

    /// Mean over samples of the smallest network objective.
    pub fn mean_objective(&self, data: &Dataset) -> Result<f64> {
        let v: Vec<f64> = data
            .ys
            .par_iter()
            .map(|y| Ok(self.assign(data, y.view())?.1))
            .collect::<Result<_>>()?;
        Ok(v.iter().sum::<f64>() / v.len().max(1) as f64)
    }
}

fn argmin(v: &[f64]) -> (usize, f64) {
    v.iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, x)| if x < best.1 { (i, x) } else { best })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureOutcome {
    pub model: MixtureModel,
    /// Mean min-objective on the training data after the sequential phase and after each refinement round.
    pub round_objectives: Vec<f64>,
    pub reference_objectives: Vec<f64>,
}

/// Objective of ISTA on `½‖y − Mz‖² + (λ/2)‖z‖₁` (the minimizers of
/// `‖y − Mz‖² + λ‖z‖₁`) after `iterations` steps of size `1/‖M‖²`.
pub fn reference_objectives(data: &Dataset, lambda: f64, iterations: usize) -> Result<Vec<f64>> {
    let norm = spectral_norm(data.matrix.view(), 500);
    let mu = 1.0 / (norm * norm);
    let ista = UnrolledNetwork::from_ista(data.matrix.view(), mu, lambda / 2.0, iterations.max(1))?;
    data.ys
        .par_iter()
        .map(|y| Ok(objective(data.matrix.view(), y.view(), ista.output(y.view())?.view(), lambda)))
        .collect()
}

fn mean_on(net: &UnrolledNetwork, data: &Dataset, idx: &[usize], lambda: f64) -> Result<f64> {
    let v: Vec<f64> = idx
        .par_iter()
        .map(|&i| Ok(objective(data.matrix.view(), data.ys[i].view(), net.output(data.ys[i].view())?.view(), lambda)))
        .collect::<Result<_>>()?;
    Ok(v.iter().sum::<f64>() / v.len().max(1) as f64)
}

/// Sequential partition training followed by assignment/fine-tuning rounds.
///
/// Network `j` is trained (warm-started from network `j − 1`) on the samples
/// not yet removed; then the `n/J` remaining samples whose objective is
/// closest (absolute difference) to the ISTA reference are removed. Each
/// refinement round reassigns every sample to its best network and fine-tunes
/// each network on its cluster, keeping the update only if the cluster's mean
/// objective does not increase.
pub fn train_mixture(initial: &UnrolledNetwork, data: &Dataset, config: &MixtureConfig) -> Result<MixtureOutcome> {
    let j = config.networks;
    let n = data.len();
    if j == 0 {
        return Err(param("a mixture needs at least one network"));
    }
    if j > n {
        return Err(param(format!("{j} networks exceed the {n} available samples")));
    }
    let lambda = config.lambda;
    let reference = if j > 1 {
        reference_objectives(data, lambda, config.reference_iterations)?
    } else {
        Vec::new()
    };
    let per_network = n / j;
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut networks = Vec::with_capacity(j);
    let mut current = initial.clone();
    for step in 0..j {
        current = train(&current, &data.subset(&remaining), &config.training)?.network;
        networks.push(current.clone());
        if step + 1 < j {
            let mut gaps: Vec<(f64, usize)> = remaining
                .par_iter()
                .map(|&i| {
                    let z = current.output(data.ys[i].view())?;
                    let obj = objective(data.matrix.view(), data.ys[i].view(), z.view(), lambda);
                    Ok(((obj - reference[i]).abs(), i))
                })
                .collect::<Result<_>>()?;
            gaps.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut removed: Vec<usize> = gaps.iter().take(per_network).map(|g| g.1).collect();
            removed.sort_unstable();
            remaining.retain(|i| removed.binary_search(i).is_err());
        }
    }
    let mut model = MixtureModel { networks, lambda };
    let mut round_objectives = vec![model.mean_objective(data)?];
    for _ in 0..config.refinement_rounds {
        let assignment: Vec<usize> = data
            .ys
            .par_iter()
            .map(|y| Ok(model.assign(data, y.view())?.0))
            .collect::<Result<_>>()?;
        for (k, net) in model.networks.iter_mut().enumerate() {
            let cluster: Vec<usize> = (0..n).filter(|&i| assignment[i] == k).collect();
            if cluster.is_empty() {
                continue;
            }
            let before = mean_on(net, data, &cluster, lambda)?;
            let tuned = train(net, &data.subset(&cluster), &config.training)?.network;
            if mean_on(&tuned, data, &cluster, lambda)? <= before {
                *net = tuned;
            }
        }
        round_objectives.push(model.mean_objective(data)?);
    }
    Ok(MixtureOutcome {
        model,
        round_objectives,
        reference_objectives: reference,
    })
}

/// Samples `ys`/`targets` sharing a Gaussian matrix with unit-norm columns.
///
/// Each code is `k`-sparse with `N(0, 1)` entries; its support is drawn from
/// one of `groups` contiguous blocks of the `d` coordinates, chosen uniformly.
pub fn grouped_sparse_dataset(m: usize, d: usize, k: usize, groups: usize, n: usize, seed: u64) -> Result<Dataset> {
    use rand::seq::index::sample;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};
    if groups == 0 || d / groups < k || k == 0 {
        return Err(param("each group must hold at least k coordinates"));
    }
    let mut r = crate::linalg::rng(seed, 0);
    let mut matrix = crate::linalg::gaussian_matrix(&mut r, m, d);
    for mut c in matrix.columns_mut() {
        let nc = c.dot(&c).sqrt();
        c /= nc;
    }
    let block = d / groups;
    let mut ys = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        let mut s = crate::linalg::rng(seed, 1 + i as u64);
        let g = s.random_range(0..groups);
        let mut x = Array1::zeros(d);
        for idx in sample(&mut s, block, k) {
            x[g * block + idx] = StandardNormal.sample(&mut s);
        }
        ys.push(matrix.dot(&x));
        targets.push(x);
    }
    Dataset::new(matrix, ys, Some(targets))
}
