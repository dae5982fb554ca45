//! Small instances where ρ, ρ_p and ε are exact, comparing measured PGD and
//! IPGD errors against the corresponding bounds.

use ndarray::Array1;
use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{run_trials, sub_seed, OutputSet};
use crate::error::{param, Result};
use crate::geom::{evaluate_bound, rho_brute_force, BoundParameters, ConeDescriptor, Theorem};
use crate::linalg::{norm, rng};
use crate::model::{make_measurements, ConstraintSet, Ensemble, SignalInstance, Transform};
use crate::proj::{epsilon_coordinate_subset_k_sparse, InexactOperator};
use crate::solve::{run_ipgd, run_pgd, step_size_for, SolverConfig, StepPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundCheckParams {
    pub d: usize,
    pub k: usize,
    pub m: usize,
    pub iterations: usize,
    /// Sizes of the random coordinate subsets used as pre-operators.
    pub subset_sizes: Vec<usize>,
    pub tolerance: f64,
}

impl Default for BoundCheckParams {
    fn default() -> Self {
        Self {
            d: 10,
            k: 2,
            m: 8,
            iterations: 30,
            subset_sizes: vec![10, 9, 8, 6],
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub instance: usize,
    pub theorem: u8,
    /// Subset size for IPGD rows, `d` for PGD.
    pub variant: usize,
    pub epsilon: f64,
    pub t: usize,
    pub err: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckOutcome {
    pub rho: f64,
    pub rows: Vec<BoundRow>,
}

impl BoundCheckOutcome {
    pub fn violations(&self, tolerance: f64) -> usize {
        self.rows.iter().filter(|r| r.err > r.bound + tolerance).count()
    }
}

fn sparse_signal(d: usize, k: usize, seed: u64) -> Array1<f64> {
    let mut r = rng(seed, 0);
    let mut x = Array1::zeros(d);
    for i in sample(&mut r, d, k) {
        x[i] = StandardNormal.sample(&mut r);
    }
    x
}

/// PGD against `(κρ)^t‖x‖` over `K − K` for `K` the `k`-sparse vectors, and
/// IPGD with coordinate-subset operators against the inexact bound with the
/// exact ε.
pub fn bound_check_instance(p: &BoundCheckParams, instance: usize, seed: u64) -> Result<BoundCheckOutcome> {
    if p.k == 0 || 2 * p.k > p.d || p.subset_sizes.iter().any(|&s| s > p.d) {
        return Err(param("bound check needs 2k ≤ d and subset sizes ≤ d"));
    }
    let x = sparse_signal(p.d, p.k, sub_seed(seed, 0));
    let nx = norm(x.view());
    let ensemble = Ensemble::IidGaussian {
        m: p.m,
        seed: sub_seed(seed, 1),
    };
    let model = make_measurements(&SignalInstance::custom(x.clone()), &ensemble, 0.0, 0)?;
    let mu = step_size_for(p.m, p.d, StepPolicy::Aggressive);
    let cone = ConeDescriptor::SparseDifference { d: p.d, k: p.k };
    let rho = rho_brute_force(model.matrix.view(), &cone, mu, None)?;
    let set = ConstraintSet::KSparse { k: p.k };
    let mut rows = Vec::new();

    let params = BoundParameters::new(rho.value, rho.value, rho.kappa, 0.0, nx)?;
    let trace = run_pgd(&model, &SolverConfig::pgd(set.clone(), mu, p.iterations).with_store_every(0))?;
    for rec in &trace.records {
        rows.push(BoundRow {
            instance,
            theorem: 2,
            variant: p.d,
            epsilon: 0.0,
            t: rec.t,
            err: rec.err.unwrap_or(f64::NAN),
            bound: evaluate_bound(Theorem::PgdSet, &params, rec.t)?,
        });
    }

    let mut r = rng(sub_seed(seed, 2), 0);
    for &size in &p.subset_sizes {
        let mut indices = sample(&mut r, p.d, size).into_vec();
        indices.sort_unstable();
        let eps = epsilon_coordinate_subset_k_sparse(&indices, p.k, x.view())?;
        let op = InexactOperator::CoefficientSubset {
            basis: Transform::Identity { n: p.d },
            indices,
        };
        let rho_p = rho_brute_force(model.matrix.view(), &cone, mu, Some(&op))?;
        let params = BoundParameters::new(rho.value, rho_p.value, rho.kappa, eps, nx)?;
        let cfg = SolverConfig::ipgd(set.clone(), op, mu, p.iterations).with_store_every(0);
        for rec in &run_ipgd(&model, &cfg)?.records {
            rows.push(BoundRow {
                instance,
                theorem: 4,
                variant: size,
                epsilon: eps,
                t: rec.t,
                err: rec.err.unwrap_or(f64::NAN),
                bound: evaluate_bound(Theorem::IpgdSet, &params, rec.t)?,
            });
        }
    }
    Ok(BoundCheckOutcome { rho: rho.value, rows })
}

pub(super) fn write(p: &BoundCheckParams, seed: u64, trials: usize, files: &mut OutputSet) -> Result<()> {
    let outcomes = run_trials(seed, trials, |i, s| bound_check_instance(p, i, s))?;
    let mut csv = String::from("instance,theorem,variant,epsilon,t,err,bound\n");
    let mut violations = 0;
    for o in &outcomes {
        violations += o.violations(p.tolerance);
        for r in &o.rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.instance, r.theorem, r.variant, r.epsilon, r.t, r.err, r.bound
            ));
        }
    }
    files.write("bound_check.csv", &csv)?;
    let summary = serde_json::json!({
        "instances": outcomes.len(),
        "violations": violations,
        "rho": outcomes.iter().map(|o| o.rho).collect::<Vec<_>>(),
    });
    files.write("summary.json", &serde_json::to_string_pretty(&summary)?)
}
