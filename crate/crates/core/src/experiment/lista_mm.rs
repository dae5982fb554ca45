//! Learned unrolled ISTA and a mixture of learned networks, evaluated by the
//! ℓ1-regularized least-squares objective on held-out data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sub_seed, OutputSet};
use crate::error::{param, Result};
use crate::learn::{
    grouped_sparse_dataset, objective, train, train_mixture, Dataset, MixtureConfig, MixtureModel, TrainingConfig,
    TrainingObjective, TrainingOutcome, UnrolledNetwork,
};
use crate::linalg::spectral_norm_exact;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ListaMmParams {
    pub m: usize,
    pub d: usize,
    pub k: usize,
    pub groups: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    pub layers: usize,
    pub lambda: f64,
    pub ista_iterations: usize,
    pub networks: usize,
    pub refinement_rounds: usize,
    pub training: TrainingConfig,
}

impl Default for ListaMmParams {
    fn default() -> Self {
        Self {
            m: 20,
            d: 40,
            k: 3,
            groups: 4,
            train_samples: 2000,
            test_samples: 500,
            layers: 10,
            lambda: 0.1,
            ista_iterations: 100,
            networks: 3,
            refinement_rounds: 3,
            training: TrainingConfig {
                objective: TrainingObjective::DirectObjective { lambda: 0.1 },
                batch_size: 50,
                learning_rate: 0.01,
                momentum: 0.9,
                epochs: 40,
                validation_fraction: 0.1,
                patience: 3,
                learn_lambda: true,
                seed: 0,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct ListaMmResults {
    pub lista: TrainingOutcome,
    pub mixture: MixtureModel,
    pub mixture_rounds: Vec<f64>,
    /// Mean held-out objective of ISTA after `t = 0..=ista_iterations` steps.
    pub ista: Vec<f64>,
    /// Mean held-out objective after `1..=layers` layers.
    pub lista_depth: Vec<f64>,
    /// Mean over held-out samples of the smallest network objective per depth.
    pub mixture_depth: Vec<f64>,
}

impl ListaMmResults {
    pub fn lista_objective(&self) -> f64 {
        *self.lista_depth.last().expect("at least one layer")
    }

    pub fn mixture_objective(&self) -> f64 {
        *self.mixture_depth.last().expect("at least one layer")
    }
}

/// Per-depth objectives `[sample][depth]` for `z_1..z_T`.
fn depth_objectives(net: &UnrolledNetwork, data: &Dataset, lambda: f64) -> Result<Vec<Vec<f64>>> {
    data.ys
        .par_iter()
        .map(|y| {
            let fwd = net.forward(y.view())?;
            Ok(fwd.outputs[1..]
                .iter()
                .map(|z| objective(data.matrix.view(), y.view(), z.view(), lambda))
                .collect())
        })
        .collect()
}

fn column_means(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len().max(1) as f64;
    let width = rows.first().map_or(0, Vec::len);
    (0..width).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect()
}

pub fn lista_mm_results(p: &ListaMmParams, seed: u64) -> Result<ListaMmResults> {
    if p.layers == 0 || p.networks == 0 || p.test_samples == 0 {
        return Err(param("layers, networks and test samples must be positive"));
    }
    let all = grouped_sparse_dataset(p.m, p.d, p.k, p.groups, p.train_samples + p.test_samples, sub_seed(seed, 0))?;
    let train_set = all.subset(&(0..p.train_samples).collect::<Vec<_>>());
    let test = all.subset(&(p.train_samples..all.len()).collect::<Vec<_>>());
    let mu = 1.0 / spectral_norm_exact(all.matrix.view()).powi(2);
    let mut training = p.training.clone();
    training.seed = sub_seed(seed, 1);

    let ista = UnrolledNetwork::from_ista(all.matrix.view(), mu, p.lambda / 2.0, p.ista_iterations.max(1))?;
    let mut ista_rows = depth_objectives(&ista, &test, p.lambda)?;
    for (row, y) in ista_rows.iter_mut().zip(&test.ys) {
        row.insert(0, y.dot(y));
    }

    let initial = UnrolledNetwork::from_ista(all.matrix.view(), mu, p.lambda / 2.0, p.layers)?;
    let lista = train(&initial, &train_set, &training)?;
    let lista_depth = column_means(&depth_objectives(&lista.network, &test, p.lambda)?);

    let mixture_cfg = MixtureConfig {
        networks: p.networks,
        refinement_rounds: p.refinement_rounds,
        lambda: p.lambda,
        reference_iterations: p.ista_iterations.max(1) * 10,
        training,
    };
    let mix = train_mixture(&lista.network, &train_set, &mixture_cfg)?;
    let per_net: Vec<Vec<Vec<f64>>> = mix
        .model
        .networks
        .iter()
        .map(|n| depth_objectives(n, &test, p.lambda))
        .collect::<Result<_>>()?;
    let best: Vec<Vec<f64>> = (0..test.len())
        .map(|i| {
            (0..p.layers)
                .map(|t| per_net.iter().map(|o| o[i][t]).fold(f64::INFINITY, f64::min))
                .collect()
        })
        .collect();

    Ok(ListaMmResults {
        ista: column_means(&ista_rows),
        lista_depth,
        mixture_depth: column_means(&best),
        mixture_rounds: mix.round_objectives,
        mixture: mix.model,
        lista,
    })
}

pub(super) fn write(p: &ListaMmParams, seed: u64, files: &mut OutputSet) -> Result<()> {
    let r = lista_mm_results(p, seed)?;
    let mut csv = String::from("t,ista\n");
    for (t, v) in r.ista.iter().enumerate() {
        csv.push_str(&format!("{t},{v}\n"));
    }
    files.write("ista_objective.csv", &csv)?;
    let mut csv = String::from("depth,ista,lista,lista_mm\n");
    for t in 0..p.layers {
        let ista = r.ista.get(t + 1).map_or(String::new(), |v| v.to_string());
        csv.push_str(&format!("{},{ista},{},{}\n", t + 1, r.lista_depth[t], r.mixture_depth[t]));
    }
    files.write("objective_vs_depth.csv", &csv)?;
    files.write("loss_lista.csv", &r.lista.history_csv())?;
    let mut csv = String::from("round,mean_objective\n");
    for (i, v) in r.mixture_rounds.iter().enumerate() {
        csv.push_str(&format!("{i},{v}\n"));
    }
    files.write("mixture_rounds.csv", &csv)?;
    files.write("lista.json", &r.lista.network.to_json()?)?;
    for (j, net) in r.mixture.networks.iter().enumerate() {
        files.write(&format!("lista_mm_{j}.json"), &net.to_json()?)?;
    }
    Ok(())
}
