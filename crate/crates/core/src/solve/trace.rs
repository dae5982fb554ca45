use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    /// `‖z_t − x‖`, when the ground truth is known.
    pub err: Option<f64>,
    /// `‖y − Mz_t‖² + λ f(z_t)`
    pub objective: f64,
    /// Wall-clock seconds since the start of the run.
    pub seconds: f64,
    /// Cumulative operation count of iterations `1..=t`.
    pub ops: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredIterate {
    pub t: usize,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub algorithm: String,
    pub records: Vec<TraceRecord>,
    pub iterates: Vec<StoredIterate>,
    pub final_iterate: Vec<f64>,
    pub warnings: Vec<String>,
}

impl ConvergenceTrace {
    pub fn errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.err.unwrap_or(f64::NAN)).collect()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn final_error(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.err)
    }

    /// CSV with header `t,err,objective,seconds`.
    pub fn to_csv(&self) -> String {
        self.csv(false)
    }

    /// CSV with header `t,err,objective,seconds,ops`.
    pub fn to_csv_with_ops(&self) -> String {
        self.csv(true)
    }

    fn csv(&self, ops: bool) -> String {
        let mut s = String::from("t,err,objective,seconds");
        if ops {
            s.push_str(",ops");
        }
        s.push('\n');
        for r in &self.records {
            let err = r.err.map(|e| format!("{e:e}")).unwrap_or_default();
            let _ = write!(s, "{},{},{:e},{:e}", r.t, err, r.objective, r.seconds);
            if ops {
                let _ = write!(s, ",{}", r.ops);
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
