//! Sparse recovery in a coherent redundant DCT dictionary: PGD onto an ℓ1
//! ball against IPGD with a neighbourhood-dominant pre-operator.

use serde::{Deserialize, Serialize};

use super::tree::transpose;
use super::{run_trials, sub_seed, OutputSet};
use crate::error::{param, Result};
use crate::linalg::{l1_norm, spectral_norm_exact};
use crate::model::{make_clustered_sparse_signal, make_measurements, ConstraintSet, Ensemble};
use crate::proj::InexactOperator;
use crate::solve::{run_ipgd, run_pgd, ConvergenceTrace, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSetup {
    pub redundancy: usize,
    pub k: usize,
    /// Neighbours are perturbed at `±offset`.
    pub offset: usize,
}

impl SpectralSetup {
    pub fn label(&self) -> String {
        format!("r{}_o{}", self.redundancy, self.offset)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralParams {
    pub setups: Vec<SpectralSetup>,
    /// Signal length; the dictionary is `n × redundancy·n`.
    pub n: usize,
    pub min_spacing: usize,
    pub sigma_neighbor: f64,
    pub window: usize,
    pub noise_sigma: f64,
    pub iterations: usize,
    /// Iteration at which the early-error comparison is made.
    pub budget_iteration: usize,
}

impl Default for SpectralParams {
    fn default() -> Self {
        let setup = |redundancy, k, offset| SpectralSetup { redundancy, k, offset };
        Self {
            setups: vec![setup(2, 2, 1), setup(2, 2, 4), setup(4, 4, 1), setup(4, 4, 4)],
            n: 64,
            min_spacing: 5,
            sigma_neighbor: 0.05f64.sqrt(),
            window: 5,
            noise_sigma: 0.0,
            iterations: 1000,
            budget_iteration: 100,
        }
    }
}

/// PGD and IPGD traces for one setup and trial seed.
pub fn spectral_trial(p: &SpectralParams, setup: &SpectralSetup, seed: u64) -> Result<[ConvergenceTrace; 2]> {
    if setup.redundancy == 0 || setup.offset == 0 {
        return Err(param("redundancy and offset must be positive"));
    }
    let d = p.n * setup.redundancy;
    let offsets = [-(setup.offset as i64), setup.offset as i64];
    let signal = make_clustered_sparse_signal(d, setup.k, p.min_spacing, &offsets, p.sigma_neighbor, sub_seed(seed, 0))?;
    let ensemble = Ensemble::RedundantDct {
        redundancy: setup.redundancy,
    };
    let model = make_measurements(&signal, &ensemble, p.noise_sigma, sub_seed(seed, 2))?;
    let mu = 1.0 / spectral_norm_exact(model.matrix.view()).powi(2);
    let ball = ConstraintSet::L1Ball {
        radius: l1_norm(signal.x.view()),
    };
    let pgd = run_pgd(&model, &SolverConfig::pgd(ball.clone(), mu, p.iterations).with_store_every(0))?;
    let op = InexactOperator::NeighborhoodDominant { window: p.window };
    let ipgd = run_ipgd(&model, &SolverConfig::ipgd(ball, op, mu, p.iterations).with_store_every(0))?;
    Ok([pgd, ipgd])
}

/// Per-trial traces for every setup, named `pgd_<setup>` and `ipgd_<setup>`.
pub fn spectral_traces(p: &SpectralParams, seed: u64, trials: usize) -> Result<Vec<(String, Vec<ConvergenceTrace>)>> {
    let per_trial = run_trials(seed, trials, |_, s| {
        let mut out = Vec::new();
        for setup in &p.setups {
            let [pgd, ipgd] = spectral_trial(p, setup, s)?;
            out.push((format!("pgd_{}", setup.label()), pgd));
            out.push((format!("ipgd_{}", setup.label()), ipgd));
        }
        Ok(out)
    })?;
    Ok(transpose(per_trial))
}

pub(super) fn write(p: &SpectralParams, seed: u64, trials: usize, files: &mut OutputSet) -> Result<()> {
    for (name, traces) in spectral_traces(p, seed, trials)? {
        files.write_traces(&format!("trace_{name}"), &traces)?;
    }
    Ok(())
}
