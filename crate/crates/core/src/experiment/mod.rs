//! Named, seeded experiments writing aggregated traces and a manifest.

mod bound_check;
mod lista_mm;
mod side_info;
mod spectral;
mod training;
mod tree;
mod width_table;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{param, Result};
use crate::linalg::rng;
use crate::solve::ConvergenceTrace;

pub use bound_check::{bound_check_instance, BoundCheckOutcome, BoundCheckParams};
pub use lista_mm::{lista_mm_results, ListaMmParams, ListaMmResults};
pub use side_info::{side_info_instance, side_info_traces, SideInfoInstance, SideInfoParams};
pub use spectral::{spectral_traces, SpectralParams, SpectralSetup};
pub use training::{run_training, TrainSpec};
pub use tree::{tree_traces, tree_traces_counted, TreeParams};
pub use width_table::{width_rows, WidthRow, WidthTableParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SpectralCs,
    Tree,
    SideInfo,
    BoundCheck,
    WidthTable,
    ListaMm,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| param(format!("unknown experiment '{s}'")))
    }

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SpectralCs => "spectral-cs",
            ExperimentKind::Tree => "tree",
            ExperimentKind::SideInfo => "side-info",
            ExperimentKind::BoundCheck => "bound-check",
            ExperimentKind::WidthTable => "width-table",
            ExperimentKind::ListaMm => "lista-mm",
        }
    }

    fn default_trials(self) -> usize {
        match self {
            ExperimentKind::SpectralCs => 50,
            ExperimentKind::Tree => 20,
            ExperimentKind::SideInfo => 100,
            ExperimentKind::BoundCheck => 20,
            ExperimentKind::WidthTable | ExperimentKind::ListaMm => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub name: ExperimentKind,
    pub seed: u64,
    /// Experiment-specific default when absent.
    pub trials: Option<usize>,
    pub output_dir: Option<String>,
    pub spectral_cs: SpectralParams,
    pub tree: TreeParams,
    pub side_info: SideInfoParams,
    pub bound_check: BoundCheckParams,
    pub width_table: WidthTableParams,
    pub lista_mm: ListaMmParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: ExperimentKind::Tree,
            seed: 0,
            trials: None,
            output_dir: None,
            spectral_cs: SpectralParams::default(),
            tree: TreeParams::default(),
            side_info: SideInfoParams::default(),
            bound_check: BoundCheckParams::default(),
            width_table: WidthTableParams::default(),
            lista_mm: ListaMmParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn new(name: ExperimentKind, seed: u64) -> Self {
        Self {
            name,
            seed,
            ..Self::default()
        }
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or_else(|| self.name.default_trials())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Sets the field at a dotted path; the value is parsed as JSON and
    /// falls back to a plain string.
    pub fn set(&mut self, path: &str, value: &str) -> Result<()> {
        let mut doc = serde_json::to_value(&*self)?;
        let parsed = serde_json::from_str(value).unwrap_or_else(|_| serde_json::Value::String(value.to_string()));
        let mut node = &mut doc;
        let parts: Vec<&str> = path.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let last = i + 1 == parts.len();
            node = match node {
                serde_json::Value::Object(map) => {
                    if !map.contains_key(*part) {
                        return Err(param(format!("unknown configuration field '{path}'")));
                    }
                    map.get_mut(*part).expect("checked above")
                }
                serde_json::Value::Array(items) => {
                    let idx: usize = part
                        .parse()
                        .map_err(|_| param(format!("'{part}' in '{path}' is not an index")))?;
                    items
                        .get_mut(idx)
                        .ok_or_else(|| param(format!("index {idx} out of range in '{path}'")))?
                }
                _ => return Err(param(format!("'{path}' does not name a field"))),
            };
            if last {
                *node = parsed.clone();
            }
        }
        *self = serde_json::from_value(doc).map_err(|e| param(format!("invalid value for '{path}': {e}")))?;
        Ok(())
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(serde_json::to_string(self)?.as_bytes()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Seed of trial `i`, independent of how trials are scheduled.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    rng(seed, 1 << 32 | trial as u64).next_u64()
}

/// Independent seed for component `part` of a trial (signal, matrix, noise, ...).
pub fn sub_seed(seed: u64, part: u64) -> u64 {
    rng(seed, 2 << 32 | part).next_u64()
}

/// Runs `f` for every trial in parallel; results are in trial order.
pub(crate) fn run_trials<T: Send>(seed: u64, trials: usize, f: impl Fn(usize, u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..trials)
        .into_par_iter()
        .map(|i| f(i, trial_seed(seed, i)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub t: usize,
    pub err_mean: f64,
    pub err_stderr: f64,
    pub objective_mean: f64,
    pub seconds_mean: f64,
    pub ops_mean: f64,
}

/// Per-iteration means over trials (summed in trial order).
pub fn aggregate(traces: &[ConvergenceTrace]) -> Vec<AggregateRow> {
    let n = traces.len();
    let len = traces.iter().map(|t| t.records.len()).min().unwrap_or(0);
    (0..len)
        .map(|i| {
            let mean = |f: &dyn Fn(&ConvergenceTrace) -> f64| traces.iter().map(f).sum::<f64>() / n as f64;
            let err_mean = mean(&|t| t.records[i].err.unwrap_or(f64::NAN));
            let var = if n > 1 {
                traces
                    .iter()
                    .map(|t| (t.records[i].err.unwrap_or(f64::NAN) - err_mean).powi(2))
                    .sum::<f64>()
                    / (n - 1) as f64
            } else {
                0.0
            };
            AggregateRow {
                t: traces[0].records[i].t,
                err_mean,
                err_stderr: (var / n as f64).sqrt(),
                objective_mean: mean(&|t| t.records[i].objective),
                seconds_mean: mean(&|t| t.records[i].seconds),
                ops_mean: mean(&|t| t.records[i].ops as f64),
            }
        })
        .collect()
}

pub const AGGREGATE_HEADER: &str = "t,err_mean,err_stderr,objective_mean,seconds_mean,ops_mean";

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut s = format!("{AGGREGATE_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.t, r.err_mean, r.err_stderr, r.objective_mean, r.seconds_mean, r.ops_mean
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub trials: usize,
    pub config_sha256: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub files: Vec<ManifestEntry>,
}

/// Collects output files and writes them with a manifest.
pub(crate) struct OutputSet {
    dir: PathBuf,
    files: Vec<ManifestEntry>,
}

impl OutputSet {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub(crate) fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, contents)?;
        self.files.push(ManifestEntry {
            path: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }

    /// Aggregated trace as `{name}.csv` and the trial-0 trace as `trial0/{name}.csv`.
    pub(crate) fn write_traces(&mut self, name: &str, traces: &[ConvergenceTrace]) -> Result<()> {
        self.write(&format!("{name}.csv"), &aggregate_csv(&aggregate(traces)))?;
        if let Some(first) = traces.first() {
            self.write(&format!("trial0/{name}.csv"), &first.to_csv_with_ops())?;
        }
        Ok(())
    }

    fn finish(self, config: &ExperimentConfig) -> Result<Manifest> {
        let manifest = Manifest {
            experiment: config.name,
            seed: config.seed,
            trials: config.trials(),
            config_sha256: config.hash()?,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            files: self.files,
        };
        std::fs::write(self.dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(manifest)
    }
}

/// Runs the configured experiment, writing into `out` (or the configured
/// output directory, or `results/<name>`).
pub fn run_experiment(config: &ExperimentConfig, out: Option<&Path>) -> Result<Manifest> {
    let dir = match (out, &config.output_dir) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => PathBuf::from("results").join(config.name.name()),
    };
    if config.trials() == 0 {
        return Err(param("at least one trial is required"));
    }
    let mut files = OutputSet::new(&dir)?;
    let trials = config.trials();
    match config.name {
        ExperimentKind::Tree => tree::write(&config.tree, config.seed, trials, &mut files)?,
        ExperimentKind::SpectralCs => spectral::write(&config.spectral_cs, config.seed, trials, &mut files)?,
        ExperimentKind::SideInfo => side_info::write(&config.side_info, config.seed, trials, &mut files)?,
        ExperimentKind::BoundCheck => bound_check::write(&config.bound_check, config.seed, trials, &mut files)?,
        ExperimentKind::WidthTable => width_table::write(&config.width_table, config.seed, &mut files)?,
        ExperimentKind::ListaMm => lista_mm::write(&config.lista_mm, config.seed, &mut files)?,
    }
    files.finish(config)
}
