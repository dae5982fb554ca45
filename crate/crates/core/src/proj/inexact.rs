//! Cheap pre-operators `p` applied before the projection in inexact PGD.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, param, Result};
use crate::model::Transform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InexactOperator {
    Identity,
    /// Zeroes every heap-ordered tree node deeper than `levels` (root depth 1).
    LevelTruncation { levels: usize },
    /// Keeps at most one dominant entry per neighbourhood: greedy by magnitude,
    /// an entry survives iff no kept entry lies at index distance `< window`.
    NeighborhoodDominant { window: usize },
    /// `B* P_S B v` for an orthonormal analysis transform `B` and index set `S`.
    CoefficientSubset { basis: Transform, indices: Vec<usize> },
    /// Piecewise in the iteration counter; stage `i` is active from `start` on.
    Scheduled { stages: Vec<ScheduleStage> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStage {
    pub start: usize,
    pub operator: InexactOperator,
}

impl InexactOperator {
    /// Level truncation starting at `initial` levels and adding one level every
    /// `every` iterations; once all `total` levels are reached the operator is the identity.
    pub fn growing_levels(initial: usize, every: usize, total: usize) -> Self {
        let mut stages = Vec::new();
        let mut levels = initial.max(1);
        let mut start = 0;
        while levels < total {
            stages.push(ScheduleStage {
                start,
                operator: InexactOperator::LevelTruncation { levels },
            });
            levels += 1;
            start += every.max(1);
        }
        stages.push(ScheduleStage {
            start,
            operator: InexactOperator::Identity,
        });
        InexactOperator::Scheduled { stages }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            InexactOperator::Identity => Ok(()),
            InexactOperator::LevelTruncation { levels } if *levels == 0 => {
                Err(param("level truncation needs at least one level"))
            }
            InexactOperator::LevelTruncation { .. } => Ok(()),
            InexactOperator::NeighborhoodDominant { window } if *window == 0 => {
                Err(param("neighbourhood window must be positive"))
            }
            InexactOperator::NeighborhoodDominant { .. } => Ok(()),
            InexactOperator::CoefficientSubset { basis, indices } => {
                basis.validate()?;
                if !basis.is_orthonormal() {
                    return Err(param("coefficient subset requires an orthonormal basis"));
                }
                check_len("coefficient subset basis", d, basis.input_dim())?;
                if indices.iter().any(|&i| i >= d) {
                    return Err(param("coefficient index out of range"));
                }
                Ok(())
            }
            InexactOperator::Scheduled { stages } => {
                if stages.first().map(|s| s.start) != Some(0) {
                    return Err(param("schedule must start at iteration 0"));
                }
                if stages.windows(2).any(|w| w[1].start <= w[0].start) {
                    return Err(param("schedule breakpoints must be strictly increasing"));
                }
                stages.iter().try_for_each(|s| s.operator.validate(d))
            }
        }
    }

    /// Operator in effect at iteration `t`.
    pub fn active(&self, t: usize) -> &InexactOperator {
        match self {
            InexactOperator::Scheduled { stages } => {
                let stage = stages
                    .iter()
                    .rev()
                    .find(|s| s.start <= t)
                    .or(stages.first())
                    .expect("validated schedules are nonempty");
                stage.operator.active(t)
            }
            other => other,
        }
    }

    pub fn is_linear(&self) -> bool {
        match self {
            InexactOperator::NeighborhoodDominant { .. } => false,
            InexactOperator::Scheduled { stages } => stages.iter().all(|s| s.operator.is_linear()),
            _ => true,
        }
    }

    pub fn is_identity_at(&self, t: usize) -> bool {
        matches!(self.active(t), InexactOperator::Identity)
    }

    pub fn apply(&self, v: ArrayView1<f64>, t: usize) -> Result<Array1<f64>> {
        match self.active(t) {
            InexactOperator::Identity => Ok(v.to_owned()),
            InexactOperator::LevelTruncation { levels } => {
                let keep = (1usize << (*levels).min(62)) - 1;
                let mut out = v.to_owned();
                out.iter_mut().skip(keep).for_each(|x| *x = 0.0);
                Ok(out)
            }
            InexactOperator::NeighborhoodDominant { window } => Ok(neighborhood_dominant(v, *window)),
            InexactOperator::CoefficientSubset { basis, indices } => {
                check_len("coefficient subset", basis.input_dim(), v.len())?;
                let c = basis.apply_unchecked(v);
                let mut kept = Array1::zeros(c.len());
                for &i in indices {
                    kept[i] = c[i];
                }
                Ok(basis.adjoint_unchecked(kept.view()))
            }
            InexactOperator::Scheduled { .. } => unreachable!("active() resolves schedules"),
        }
    }

    /// Multiply-add style operation count of one application at iteration `t`.
    pub fn cost(&self, d: usize, t: usize) -> u64 {
        let d64 = d as u64;
        match self.active(t) {
            InexactOperator::Identity => 0,
            InexactOperator::LevelTruncation { .. } => d64,
            InexactOperator::NeighborhoodDominant { window } => {
                d64 * ceil_log2(d) + d64 * (*window as u64)
            }
            InexactOperator::CoefficientSubset { basis, .. } => 2 * basis.cost() + d64,
            InexactOperator::Scheduled { .. } => unreachable!(),
        }
    }
}

pub(crate) fn ceil_log2(d: usize) -> u64 {
    (usize::BITS - d.max(1).saturating_sub(1).leading_zeros()) as u64
}

fn neighborhood_dominant(v: ArrayView1<f64>, window: usize) -> Array1<f64> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).filter(|&i| v[i] != 0.0).collect();
    order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    let mut blocked = vec![false; n];
    let mut out = Array1::zeros(n);
    for i in order {
        if blocked[i] {
            continue;
        }
        out[i] = v[i];
        let lo = i.saturating_sub(window - 1);
        let hi = (i + window - 1).min(n - 1);
        blocked[lo..=hi].iter_mut().for_each(|b| *b = true);
    }
    out
}
