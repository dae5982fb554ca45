//! Tree-structured sparse recovery: IHT, model-based IHT and IPGD with
//! level-truncation pre-operators.

use serde::{Deserialize, Serialize};

use super::{run_trials, sub_seed, OutputSet};
use crate::error::{param, Result};
use crate::linalg::norm;
use crate::model::{make_measurements, make_tree_signal, ConstraintSet, Ensemble};
use crate::proj::InexactOperator;
use crate::solve::{run_ipgd, run_pgd, step_size_for, ConvergenceTrace, SolverConfig, StepPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub levels: usize,
    pub k: usize,
    pub top_levels: usize,
    pub sigma_top: f64,
    pub sigma_rest: f64,
    pub m: usize,
    pub noise_sigma: f64,
    pub iterations: usize,
    pub truncation_levels: Vec<usize>,
    pub schedule_initial: usize,
    pub schedule_every: usize,
    /// Keep only instances where model-based IHT reaches
    /// `converged_tolerance·‖x‖`; candidates are drawn in seed order until
    /// `trials` instances are accepted.
    pub only_converged: bool,
    pub converged_tolerance: f64,
    /// Candidates examined per accepted trial before giving up.
    pub max_candidates_per_trial: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            levels: 7,
            k: 13,
            top_levels: 2,
            sigma_top: 1.0,
            sigma_rest: 0.2,
            m: 60,
            noise_sigma: 0.0,
            iterations: 300,
            truncation_levels: vec![1, 2, 3, 4, 5],
            schedule_initial: 2,
            schedule_every: 4,
            only_converged: false,
            converged_tolerance: 1e-6,
            max_candidates_per_trial: 20,
        }
    }
}

/// Traces of one trial: `(name, trace)` in output order.
pub fn tree_trial(p: &TreeParams, seed: u64) -> Result<Vec<(String, ConvergenceTrace)>> {
    let signal = make_tree_signal(p.levels, p.k, p.top_levels, p.sigma_top, p.sigma_rest, sub_seed(seed, 0))?;
    let d = signal.d;
    let ensemble = Ensemble::IidGaussian {
        m: p.m,
        seed: sub_seed(seed, 1),
    };
    let model = make_measurements(&signal, &ensemble, p.noise_sigma, sub_seed(seed, 2))?;
    let mu = step_size_for(p.m, d, StepPolicy::Conservative);
    let t = p.iterations;
    let sparse = ConstraintSet::KSparse { k: p.k };
    let tree = ConstraintSet::TreeSparse {
        k: p.k,
        levels: p.levels,
    };
    let mut out = vec![
        ("iht".to_string(), run_pgd(&model, &SolverConfig::pgd(sparse.clone(), mu, t).with_store_every(0))?),
        ("mbiht".to_string(), run_pgd(&model, &SolverConfig::pgd(tree, mu, t).with_store_every(0))?),
    ];
    for &l in &p.truncation_levels {
        let op = InexactOperator::LevelTruncation { levels: l };
        let cfg = SolverConfig::ipgd(sparse.clone(), op, mu, t).with_store_every(0);
        out.push((format!("ipgd_l{l}"), run_ipgd(&model, &cfg)?));
    }
    let schedule = InexactOperator::growing_levels(p.schedule_initial, p.schedule_every, p.levels);
    let cfg = SolverConfig::ipgd(sparse, schedule, mu, t).with_store_every(0);
    out.push(("scheduled".to_string(), run_ipgd(&model, &cfg)?));
    Ok(out)
}

fn converged(p: &TreeParams, seed: u64, traces: &[(String, ConvergenceTrace)]) -> Result<bool> {
    if !p.only_converged {
        return Ok(true);
    }
    let signal = make_tree_signal(p.levels, p.k, p.top_levels, p.sigma_top, p.sigma_rest, sub_seed(seed, 0))?;
    let nx = norm(signal.x.view());
    let mbiht = &traces[1].1;
    Ok(mbiht.final_error().is_some_and(|e| e <= p.converged_tolerance * nx))
}

/// Per-trial traces grouped by algorithm name, and the number of candidate
/// instances examined.
pub fn tree_traces_counted(
    p: &TreeParams,
    seed: u64,
    trials: usize,
) -> Result<(Vec<(String, Vec<ConvergenceTrace>)>, usize)> {
    let limit = trials * p.max_candidates_per_trial.max(1);
    let mut accepted = Vec::with_capacity(trials);
    let mut examined = 0;
    while accepted.len() < trials {
        if examined >= limit {
            return Err(param(format!(
                "only {} of {limit} candidate instances converged; raise `m` or disable `only_converged`",
                accepted.len()
            )));
        }
        let batch = trials.min(limit - examined);
        let found = run_trials(seed, examined + batch, |i, s| {
            if i < examined {
                return Ok(None);
            }
            let traces = tree_trial(p, s)?;
            Ok(converged(p, s, &traces)?.then_some(traces))
        })?;
        examined += batch;
        accepted.extend(found.into_iter().flatten());
    }
    accepted.truncate(trials);
    Ok((transpose(accepted), examined))
}

/// Per-trial traces grouped by algorithm name.
pub fn tree_traces(p: &TreeParams, seed: u64, trials: usize) -> Result<Vec<(String, Vec<ConvergenceTrace>)>> {
    Ok(tree_traces_counted(p, seed, trials)?.0)
}

pub(crate) fn transpose(per_trial: Vec<Vec<(String, ConvergenceTrace)>>) -> Vec<(String, Vec<ConvergenceTrace>)> {
    let mut grouped: Vec<(String, Vec<ConvergenceTrace>)> = Vec::new();
    for trial in per_trial {
        for (i, (name, trace)) in trial.into_iter().enumerate() {
            if grouped.len() <= i {
                grouped.push((name, Vec::new()));
            }
            grouped[i].1.push(trace);
        }
    }
    grouped
}

pub(super) fn write(p: &TreeParams, seed: u64, trials: usize, files: &mut OutputSet) -> Result<()> {
    let (grouped, examined) = tree_traces_counted(p, seed, trials)?;
    for (name, traces) in grouped {
        files.write_traces(&format!("trace_{name}"), &traces)?;
    }
    let summary = serde_json::json!({ "accepted": trials, "examined": examined });
    files.write("summary.json", &serde_json::to_string_pretty(&summary)?)
}
