//! File-driven training of a single unrolled network.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{sha256_hex, ManifestEntry};
use crate::error::{param, Result};
use crate::learn::{grouped_sparse_dataset, train, TrainingConfig, TrainingObjective, TrainingOutcome, UnrolledNetwork};
use crate::linalg::spectral_norm_exact;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSpec {
    pub m: usize,
    pub d: usize,
    pub k: usize,
    pub groups: usize,
    pub samples: usize,
    pub data_seed: u64,
    pub layers: usize,
    /// Weight of `‖z‖₁`; the network starts as ISTA on this objective.
    pub lambda: f64,
    pub training: TrainingConfig,
}

impl Default for TrainSpec {
    fn default() -> Self {
        Self {
            m: 20,
            d: 40,
            k: 3,
            groups: 4,
            samples: 1000,
            data_seed: 0,
            layers: 10,
            lambda: 0.1,
            training: TrainingConfig {
                objective: TrainingObjective::DirectObjective { lambda: 0.1 },
                batch_size: 50,
                learning_rate: 0.01,
                epochs: 20,
                ..TrainingConfig::default()
            },
        }
    }
}

/// Trains the network described by `spec`, writing `checkpoint.json`,
/// `loss.csv` and `manifest.json` into `out`.
pub fn run_training(spec: &TrainSpec, out: &Path) -> Result<TrainingOutcome> {
    if spec.samples == 0 || spec.layers == 0 {
        return Err(param("samples and layers must be positive"));
    }
    let data = grouped_sparse_dataset(spec.m, spec.d, spec.k, spec.groups, spec.samples, spec.data_seed)?;
    let mu = 1.0 / spectral_norm_exact(data.matrix.view()).powi(2);
    let initial = UnrolledNetwork::from_ista(data.matrix.view(), mu, spec.lambda / 2.0, spec.layers)?;
    let outcome = train(&initial, &data, &spec.training)?;
    std::fs::create_dir_all(out)?;
    let mut files = Vec::new();
    for (name, contents) in [
        ("checkpoint.json", outcome.network.to_json()?),
        ("loss.csv", outcome.history_csv()),
    ] {
        std::fs::write(out.join(name), &contents)?;
        files.push(ManifestEntry {
            path: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
        });
    }
    let manifest = serde_json::json!({
        "spec": spec,
        "spec_sha256": sha256_hex(serde_json::to_string(spec)?.as_bytes()),
        "version": env!("CARGO_PKG_VERSION"),
        "best_epoch": outcome.best_epoch,
        "files": files,
    });
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(outcome)
}
