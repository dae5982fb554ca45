//! Recovery of DCT coefficients of image patches with Haar-domain side
//! information supplied through coefficient-subset pre-operators.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::tree::transpose;
use super::{run_trials, sub_seed, OutputSet};
use crate::error::{param, Result};
use crate::linalg::l1_norm;
use crate::model::{
    energy_order, extract_patches, make_measurements, oracle_energy_subset, read_pgm, synthetic_image, ConstraintSet, Ensemble,
    SignalInstance, Transform,
};
use crate::proj::{measure_epsilon, InexactOperator, ScheduleStage};
use crate::solve::{run_ipgd, run_pgd, step_size_for, ConvergenceTrace, SolverConfig, StepPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SideInfoParams {
    pub patch: usize,
    pub m: usize,
    /// Binary PGM to draw patches from; a synthetic image is used when absent.
    pub image_path: Option<String>,
    pub image_size: usize,
    pub image_seed: u64,
    pub energy_fraction: f64,
    pub schedule_start_fraction: f64,
    pub schedule_add: usize,
    pub schedule_every: usize,
    pub fixed_columns: usize,
    pub fixed_schedule_start: usize,
    pub iterations: usize,
}

impl Default for SideInfoParams {
    fn default() -> Self {
        Self {
            patch: 32,
            m: 700,
            image_path: None,
            image_size: 256,
            image_seed: 0,
            energy_fraction: 0.95,
            schedule_start_fraction: 0.5,
            schedule_add: 50,
            schedule_every: 5,
            fixed_columns: 512,
            fixed_schedule_start: 256,
            iterations: 150,
        }
    }
}

impl SideInfoParams {
    fn dct(&self) -> Transform {
        Transform::Dct2 {
            rows: self.patch,
            cols: self.patch,
        }
    }

    /// Analysis operator from DCT coefficients to Haar coefficients of the patch.
    pub fn haar_of_dct(&self) -> Transform {
        Transform::Chain {
            stages: vec![
                Transform::Adjoint {
                    inner: Box::new(self.dct()),
                },
                Transform::Haar2 { n: self.patch },
            ],
        }
    }
}

/// One patch expressed in the DCT domain together with its pre-operators.
#[derive(Debug, Clone)]
pub struct SideInfoInstance {
    /// DCT coefficients of the unit-norm, mean-free patch.
    pub x: Array1<f64>,
    pub oracle: InexactOperator,
    pub growing_oracle: InexactOperator,
    pub fixed: InexactOperator,
    pub growing_fixed: InexactOperator,
    pub oracle_columns: usize,
}

fn subset(basis: &Transform, indices: Vec<usize>) -> InexactOperator {
    let mut indices = indices;
    indices.sort_unstable();
    InexactOperator::CoefficientSubset {
        basis: basis.clone(),
        indices,
    }
}

/// Coefficient subsets growing by `add` every `every` iterations from
/// `order[..start]` to `order[..end]`, followed by `last` if given.
fn growing(basis: &Transform, order: &[usize], start: usize, end: usize, add: usize, every: usize, last: Option<InexactOperator>) -> InexactOperator {
    let mut stages = Vec::new();
    let mut count = start.min(end);
    let mut t = 0;
    loop {
        stages.push(ScheduleStage {
            start: t,
            operator: subset(basis, order[..count].to_vec()),
        });
        if count >= end {
            break;
        }
        count = (count + add.max(1)).min(end);
        t += every.max(1);
    }
    if let Some(op) = last {
        stages.push(ScheduleStage {
            start: t + every.max(1),
            operator: op,
        });
    }
    InexactOperator::Scheduled { stages }
}

pub fn side_info_instance(p: &SideInfoParams, seed: u64) -> Result<SideInfoInstance> {
    let n = p.patch * p.patch;
    if p.fixed_columns > n || p.fixed_schedule_start > n {
        return Err(param(format!("column counts exceed the {n} available")));
    }
    let image = match &p.image_path {
        Some(path) => read_pgm(path)?,
        None => synthetic_image(p.image_size, p.image_seed),
    };
    let patch = extract_patches(&image, p.patch, 1, sub_seed(seed, 0))?.remove(0);
    let x = p.dct().apply(patch.view())?;
    let basis = p.haar_of_dct();
    let haar = basis.apply(x.view())?;
    let oracle_idx = oracle_energy_subset(haar.view(), p.energy_fraction)?;
    let start = oracle_energy_subset(haar.view(), p.schedule_start_fraction)?.len();
    let order = energy_order(haar.view());
    let coarse: Vec<usize> = (0..n).collect();
    Ok(SideInfoInstance {
        oracle_columns: oracle_idx.len(),
        oracle: subset(&basis, oracle_idx.clone()),
        growing_oracle: growing(&basis, &order, start, oracle_idx.len(), p.schedule_add, p.schedule_every, None),
        fixed: subset(&basis, coarse[..p.fixed_columns].to_vec()),
        growing_fixed: growing(
            &basis,
            &coarse,
            p.fixed_schedule_start,
            n,
            p.schedule_add,
            p.schedule_every,
            Some(InexactOperator::Identity),
        ),
        x,
    })
}

/// Traces (pgd, oracle, growing_oracle, fixed, growing_fixed) and the
/// measured ε values of the oracle operator for one trial.
fn side_info_trial(p: &SideInfoParams, seed: u64) -> Result<(Vec<(String, ConvergenceTrace)>, [f64; 3])> {
    let inst = side_info_instance(p, seed)?;
    let d = inst.x.len();
    let signal = SignalInstance::custom(inst.x.clone());
    let ensemble = Ensemble::Composed {
        m: p.m,
        seed: sub_seed(seed, 1),
        synthesis: Transform::Adjoint {
            inner: Box::new(p.dct()),
        },
    };
    let model = make_measurements(&signal, &ensemble, 0.0, sub_seed(seed, 2))?;
    let mu = step_size_for(p.m, d, StepPolicy::Conservative);
    let ball = ConstraintSet::L1Ball {
        radius: l1_norm(inst.x.view()),
    };
    let t = p.iterations;
    let eps = measure_epsilon(&inst.oracle, &ball, inst.x.view())?;
    let mut out = vec![(
        "pgd".to_string(),
        run_pgd(&model, &SolverConfig::pgd(ball.clone(), mu, t).with_store_every(0))?,
    )];
    for (name, op) in [
        ("oracle", &inst.oracle),
        ("growing_oracle", &inst.growing_oracle),
        ("fixed", &inst.fixed),
        ("growing_fixed", &inst.growing_fixed),
    ] {
        let cfg = SolverConfig::ipgd(ball.clone(), op.clone(), mu, t).with_store_every(0);
        out.push((name.to_string(), run_ipgd(&model, &cfg)?));
    }
    Ok((out, [eps.epsilon_sufficient, eps.epsilon_convex, inst.oracle_columns as f64]))
}

/// Per-trial traces grouped by method, plus per-trial
/// `[epsilon_sufficient, epsilon_convex, oracle_columns]`.
pub fn side_info_traces(p: &SideInfoParams, seed: u64, trials: usize) -> Result<(Vec<(String, Vec<ConvergenceTrace>)>, Vec<[f64; 3]>)> {
    let per_trial = run_trials(seed, trials, |_, s| side_info_trial(p, s))?;
    let (traces, eps): (Vec<_>, Vec<_>) = per_trial.into_iter().unzip();
    Ok((transpose(traces), eps))
}

pub(super) fn write(p: &SideInfoParams, seed: u64, trials: usize, files: &mut OutputSet) -> Result<()> {
    let (grouped, eps) = side_info_traces(p, seed, trials)?;
    for (name, traces) in grouped {
        files.write_traces(&format!("trace_{name}"), &traces)?;
    }
    let mut csv = String::from("trial,epsilon_sufficient,epsilon_convex,oracle_columns\n");
    for (i, e) in eps.iter().enumerate() {
        csv.push_str(&format!("{i},{},{},{}\n", e[0], e[1], e[2]));
    }
    let n = eps.len() as f64;
    csv.push_str(&format!(
        "mean,{},{},{}\n",
        eps.iter().map(|e| e[0]).sum::<f64>() / n,
        eps.iter().map(|e| e[1]).sum::<f64>() / n,
        eps.iter().map(|e| e[2]).sum::<f64>() / n
    ));
    files.write("epsilon.csv", &csv)
}
