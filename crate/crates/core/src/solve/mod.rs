//! PGD, ISTA, inexact PGD and the unrolled iteration, with convergence traces.

mod trace;

use std::time::Instant;

use log::warn;
use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, param, Result};
use crate::learn::UnrolledNetwork;
use crate::linalg::{dist, l1_norm, spectral_norm};
use crate::model::{ConstraintSet, MeasurementModel};
use crate::proj::{proximal_l1, InexactOperator};

pub use trace::{ConvergenceTrace, StoredIterate, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Pgd,
    Ista,
    Ipgd,
    Unrolled,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pgd => "pgd",
            Algorithm::Ista => "ista",
            Algorithm::Ipgd => "ipgd",
            Algorithm::Unrolled => "unrolled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub step_size: f64,
    pub max_iterations: usize,
    #[serde(default)]
    pub constraint: Option<ConstraintSet>,
    #[serde(default)]
    pub inexact: Option<InexactOperator>,
    #[serde(default)]
    pub lambda: f64,
    /// Starting point; zero when absent.
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
    /// Store `z_t` every this many iterations (0 stores none). Defaults to
    /// every iteration up to `T = 1000` and about 1000 snapshots beyond.
    #[serde(default)]
    pub store_every: Option<usize>,
}

impl SolverConfig {
    pub fn pgd(constraint: ConstraintSet, step_size: f64, max_iterations: usize) -> Self {
        Self {
            algorithm: Algorithm::Pgd,
            step_size,
            max_iterations,
            constraint: Some(constraint),
            inexact: None,
            lambda: 0.0,
            initial: None,
            store_every: None,
        }
    }

    pub fn ista(lambda: f64, step_size: f64, max_iterations: usize) -> Self {
        Self {
            algorithm: Algorithm::Ista,
            lambda,
            constraint: None,
            ..Self::pgd(ConstraintSet::KSparse { k: 1 }, step_size, max_iterations)
        }
    }

    pub fn ipgd(
        constraint: ConstraintSet,
        inexact: InexactOperator,
        step_size: f64,
        max_iterations: usize,
    ) -> Self {
        Self {
            algorithm: Algorithm::Ipgd,
            inexact: Some(inexact),
            ..Self::pgd(constraint, step_size, max_iterations)
        }
    }

    pub fn with_store_every(mut self, s: usize) -> Self {
        self.store_every = Some(s);
        self
    }

    fn store_interval(&self) -> usize {
        self.store_every
            .unwrap_or_else(|| self.max_iterations.div_ceil(1000).max(1))
    }

    fn expect(&self, algorithm: Algorithm, d: usize) -> Result<()> {
        if self.algorithm != algorithm {
            return Err(param(format!(
                "configuration is for {}, not {}",
                self.algorithm.name(),
                algorithm.name()
            )));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(param(format!("step size must be positive, got {}", self.step_size)));
        }
        if let Some(z0) = &self.initial {
            check_len("initial point", d, z0.len())?;
        }
        Ok(())
    }

    fn constraint(&self, d: usize) -> Result<&ConstraintSet> {
        let set = self
            .constraint
            .as_ref()
            .ok_or_else(|| param("a constraint set is required"))?;
        set.validate(d)?;
        Ok(set)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepPolicy {
    /// `1/(√d + √m)²`
    Conservative,
    /// `1/m`
    Aggressive,
}

pub fn default_step_size(model: &MeasurementModel, policy: StepPolicy) -> f64 {
    step_size_for(model.m(), model.d(), policy)
}

pub fn step_size_for(m: usize, d: usize, policy: StepPolicy) -> f64 {
    match policy {
        StepPolicy::Conservative => 1.0 / ((d as f64).sqrt() + (m as f64).sqrt()).powi(2),
        StepPolicy::Aggressive => 1.0 / m as f64,
    }
}

/// Operation count of `M*(y − Mz)`.
pub fn gradient_cost(m: usize, d: usize) -> u64 {
    let (m, d) = (m as u64, d as u64);
    2 * m * d + m + 2 * d
}

/// `M*(y − Mz)`
fn gradient(model: &MeasurementModel, z: &Array1<f64>) -> Array1<f64> {
    let r = &model.y - &model.matrix.dot(z);
    model.matrix.t().dot(&r)
}

struct Recorder<'a> {
    model: &'a MeasurementModel,
    lambda: f64,
    start: Instant,
    store_every: usize,
    trace: ConvergenceTrace,
}

impl<'a> Recorder<'a> {
    fn new(model: &'a MeasurementModel, name: &str, lambda: f64, store_every: usize) -> Self {
        Self {
            model,
            lambda,
            start: Instant::now(),
            store_every,
            trace: ConvergenceTrace {
                algorithm: name.to_string(),
                records: Vec::new(),
                iterates: Vec::new(),
                final_iterate: Vec::new(),
                warnings: Vec::new(),
            },
        }
    }

    fn record(&mut self, t: usize, z: &Array1<f64>, ops: u64) {
        let err = self.model.x.as_ref().map(|x| dist(z.view(), x.view()));
        let objective = self.model.residual_sq(z.view())
            + if self.lambda != 0.0 { self.lambda * l1_norm(z.view()) } else { 0.0 };
        let seconds = self.start.elapsed().as_secs_f64();
        let seconds = self.trace.records.last().map_or(seconds, |r| seconds.max(r.seconds));
        self.trace.records.push(TraceRecord {
            t,
            err,
            objective,
            seconds,
            ops,
        });
        if self.store_every > 0 && t % self.store_every == 0 {
            self.trace.iterates.push(StoredIterate { t, z: z.to_vec() });
        }
    }

    fn finish(mut self, z: Array1<f64>) -> ConvergenceTrace {
        self.trace.final_iterate = z.to_vec();
        self.trace
    }
}

fn initial_point(config: &SolverConfig, d: usize) -> Array1<f64> {
    config
        .initial
        .as_ref()
        .map_or_else(|| Array1::zeros(d), |z| Array1::from(z.clone()))
}

/// `z_{t+1} = P_K(z_t + μM*(y − Mz_t))`
pub fn run_pgd(model: &MeasurementModel, config: &SolverConfig) -> Result<ConvergenceTrace> {
    let (m, d) = (model.m(), model.d());
    config.expect(Algorithm::Pgd, d)?;
    let set = config.constraint(d)?;
    let per_iter = gradient_cost(m, d) + set.cost(d);
    let mut rec = Recorder::new(model, "pgd", 0.0, config.store_interval());
    let mut z = initial_point(config, d);
    let mut ops = 0;
    rec.record(0, &z, ops);
    for t in 0..config.max_iterations {
        let g = gradient(model, &z);
        let v = &z + &(g * config.step_size);
        z = set.project(v.view())?;
        ops += per_iter;
        rec.record(t + 1, &z, ops);
    }
    Ok(rec.finish(z))
}

/// `z_{t+1} = P_K(p(z_t) + μ p(M*(y − Mz_t)))`, with `p` evaluated at iteration `t`.
pub fn run_ipgd(model: &MeasurementModel, config: &SolverConfig) -> Result<ConvergenceTrace> {
    let (m, d) = (model.m(), model.d());
    config.expect(Algorithm::Ipgd, d)?;
    let set = config.constraint(d)?;
    let p = config
        .inexact
        .as_ref()
        .ok_or_else(|| param("inexact PGD requires an inexact operator"))?;
    p.validate(d)?;
    let mut rec = Recorder::new(model, "ipgd", 0.0, config.store_interval());
    let mut z = initial_point(config, d);
    let mut ops = 0;
    rec.record(0, &z, ops);
    for t in 0..config.max_iterations {
        let g = gradient(model, &z);
        let pz = p.apply(z.view(), t)?;
        let pg = p.apply(g.view(), t)?;
        let v = &pz + &(pg * config.step_size);
        z = set.project(v.view())?;
        ops += gradient_cost(m, d) + set.cost(d) + 2 * p.cost(d, t);
        rec.record(t + 1, &z, ops);
    }
    Ok(rec.finish(z))
}

/// `z_{t+1} = S_{μλ}(z_t + μM*(y − Mz_t))`, the proximal iteration for
/// `½‖y − Mz‖² + λ‖z‖₁`.
///
/// The recorded objective is `‖y − Mz‖² + 2λ‖z‖₁`, twice the minimized
/// function, so that the data term matches the other solvers.
pub fn run_ista(model: &MeasurementModel, config: &SolverConfig) -> Result<ConvergenceTrace> {
    let (m, d) = (model.m(), model.d());
    config.expect(Algorithm::Ista, d)?;
    if !(config.lambda >= 0.0) {
        return Err(param(format!("λ must be nonnegative, got {}", config.lambda)));
    }
    let mut rec = Recorder::new(model, "ista", 2.0 * config.lambda, config.store_interval());
    let norm_m = spectral_norm(model.matrix.view(), 200);
    let inv = 1.0 / config.step_size;
    if inv < norm_m {
        rec.trace
            .warnings
            .push(format!("1/μ = {inv} is below ‖M‖ = {norm_m}"));
    }
    if inv < norm_m * norm_m {
        rec.trace
            .warnings
            .push(format!("1/μ = {inv} is below ‖M‖² = {}; the objective may increase", norm_m * norm_m));
    }
    for w in &rec.trace.warnings {
        warn!("ista: {w}");
    }
    let threshold = config.step_size * config.lambda;
    let per_iter = gradient_cost(m, d) + d as u64;
    let mut z = initial_point(config, d);
    let mut ops = 0;
    rec.record(0, &z, ops);
    for t in 0..config.max_iterations {
        let g = gradient(model, &z);
        let v = &z + &(g * config.step_size);
        z = proximal_l1(v.view(), threshold);
        ops += per_iter;
        rec.record(t + 1, &z, ops);
    }
    Ok(rec.finish(z))
}

/// `z_{t+1} = σ(Ay + Uz_t)` for the network's `T` layers.
pub fn run_unrolled(model: &MeasurementModel, network: &UnrolledNetwork) -> Result<ConvergenceTrace> {
    let (m, d) = (model.m(), model.d());
    network.check_dims(d, m)?;
    if network.layers == 0 {
        return Err(param("network needs at least one layer"));
    }
    let ay = network.a.dot(&model.y);
    let per_iter = (d * d + d) as u64 + network.nonlinearity.cost(d);
    let mut rec = Recorder::new(model, "unrolled", 0.0, 1);
    let mut z = Array1::zeros(d);
    let mut ops = (d * m) as u64;
    rec.record(0, &z, 0);
    for t in 0..network.layers {
        z = network.layer(ay.view(), z.view());
        ops += per_iter;
        rec.record(t + 1, &z, ops);
    }
    Ok(rec.finish(z))
}

/// Dispatches on `config.algorithm` (the unrolled iteration needs a network
/// and is not reachable from a configuration).
pub fn solve(model: &MeasurementModel, config: &SolverConfig) -> Result<ConvergenceTrace> {
    match config.algorithm {
        Algorithm::Pgd => run_pgd(model, config),
        Algorithm::Ista => run_ista(model, config),
        Algorithm::Ipgd => run_ipgd(model, config),
        Algorithm::Unrolled => Err(param("use run_unrolled with a network")),
    }
}

/// `z_t − x = −(I − μM*M)^t x` for unconstrained gradient descent from zero.
pub fn linear_error(model: &MeasurementModel, mu: f64, x: ArrayView1<f64>, t: usize) -> Array1<f64> {
    let d = model.d();
    let g = ndarray::Array2::<f64>::eye(d) - model.matrix.t().dot(&model.matrix) * mu;
    let mut e = x.to_owned() * -1.0;
    for _ in 0..t {
        e = g.dot(&e);
    }
    e
}
