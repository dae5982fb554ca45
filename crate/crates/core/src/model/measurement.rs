use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, param, Error, Result};
use crate::linalg::{gaussian_matrix, gaussian_vector, norm, rng};
use crate::model::{SignalInstance, Transform};

/// How the measurement matrix is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Ensemble {
    /// `m × d` matrix with i.i.d. `N(0, 1)` entries, filled row by row.
    IidGaussian { m: usize, seed: u64 },
    /// The `d/r × d` redundant DCT dictionary.
    RedundantDct { redundancy: usize },
    /// `A · S` with `A` an `m × n` Gaussian matrix and `S` the synthesis
    /// transform mapping the `d` unknowns to an `n`-dimensional signal.
    Composed {
        m: usize,
        seed: u64,
        synthesis: Transform,
    },
    /// A matrix supplied by the caller.
    Explicit,
}

impl Ensemble {
    pub fn build(&self, d: usize) -> Result<Array2<f64>> {
        match self {
            Ensemble::IidGaussian { m, seed } => {
                if *m == 0 {
                    return Err(param("measurement count must be positive"));
                }
                Ok(gaussian_matrix(&mut rng(*seed, 0), *m, d))
            }
            Ensemble::RedundantDct { redundancy } => {
                if *redundancy == 0 || d % redundancy != 0 {
                    return Err(param(format!(
                        "dimension {d} is not a multiple of redundancy {redundancy}"
                    )));
                }
                Ok(super::transform::redundant_dct_matrix(d / redundancy, d))
            }
            Ensemble::Composed { m, seed, synthesis } => {
                synthesis.validate()?;
                check_len("composed ensemble", synthesis.input_dim(), d)?;
                if *m == 0 {
                    return Err(param("measurement count must be positive"));
                }
                let a = gaussian_matrix(&mut rng(*seed, 0), *m, synthesis.output_dim());
                // row i of A·S is Sᵀ applied to row i of A
                let mut out = Array2::zeros((*m, d));
                for (i, row) in a.rows().into_iter().enumerate() {
                    out.row_mut(i).assign(&synthesis.adjoint_unchecked(row));
                }
                Ok(out)
            }
            Ensemble::Explicit => Err(param("an explicit ensemble carries no generator")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    pub matrix: Array2<f64>,
    pub e: Option<Array1<f64>>,
    pub y: Array1<f64>,
    /// Ground truth, when known.
    pub x: Option<Array1<f64>>,
    pub ensemble: Ensemble,
    pub seed: u64,
}

impl MeasurementModel {
    /// Wraps an explicit noiseless system `y = Mx`.
    pub fn from_matrix(matrix: Array2<f64>, x: Array1<f64>) -> Result<Self> {
        check_len("measurement matrix columns", matrix.ncols(), x.len())?;
        let y = matrix.dot(&x);
        Ok(Self {
            matrix,
            e: None,
            y,
            x: Some(x),
            ensemble: Ensemble::Explicit,
            seed: 0,
        })
    }

    /// Wraps measurements whose ground truth is unknown.
    pub fn from_observation(matrix: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        check_len("measurement rows", matrix.nrows(), y.len())?;
        Ok(Self {
            matrix,
            e: None,
            y,
            x: None,
            ensemble: Ensemble::Explicit,
            seed: 0,
        })
    }

    pub fn d(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn m(&self) -> usize {
        self.matrix.nrows()
    }

    /// `‖y − Mz‖²`
    pub fn residual_sq(&self, z: ArrayView1<f64>) -> f64 {
        let r = &self.y - &self.matrix.dot(&z);
        r.dot(&r)
    }

    pub fn to_document(&self) -> MeasurementDocument {
        MeasurementDocument {
            d: self.d(),
            m: self.m(),
            seed: self.seed,
            ensemble: self.ensemble.clone(),
            x: self.x.as_ref().map(|x| x.to_vec()),
            y: self.y.to_vec(),
            e: self.e.as_ref().map(|e| e.to_vec()),
            matrix: matches!(self.ensemble, Ensemble::Explicit)
                .then(|| self.matrix.rows().into_iter().map(|r| r.to_vec()).collect()),
        }
    }

    /// Rebuilds the model, regenerating `M` from the ensemble unless it is
    /// stored explicitly.
    pub fn from_document(doc: &MeasurementDocument) -> Result<Self> {
        let matrix = match &doc.matrix {
            Some(rows) => {
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                Array2::from_shape_vec((doc.m, doc.d), flat)
                    .map_err(|_| param("stored matrix does not match m × d"))?
            }
            None => doc.ensemble.build(doc.d)?,
        };
        check_len("measurement document rows", doc.m, matrix.nrows())?;
        check_len("measurement document y", doc.m, doc.y.len())?;
        Ok(Self {
            matrix,
            e: doc.e.clone().map(Array1::from),
            y: Array1::from(doc.y.clone()),
            x: doc.x.clone().map(Array1::from),
            ensemble: doc.ensemble.clone(),
            seed: doc.seed,
        })
    }
}

/// Serialized form `{d, m, seed, ensemble, x, y}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementDocument {
    pub d: usize,
    pub m: usize,
    pub seed: u64,
    pub ensemble: Ensemble,
    pub x: Option<Vec<f64>>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

/// Builds `M` from the ensemble and measures `y = Mx + e`, with
/// `e ~ N(0, noise_sigma²·I)` drawn from `seed` (no noise when `noise_sigma = 0`).
pub fn make_measurements(
    signal: &SignalInstance,
    ensemble: &Ensemble,
    noise_sigma: f64,
    seed: u64,
) -> Result<MeasurementModel> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(param(format!("invalid noise level {noise_sigma}")));
    }
    check_len("signal", signal.d, signal.x.len())?;
    let matrix = ensemble.build(signal.d)?;
    let clean = matrix.dot(&signal.x);
    let e = (noise_sigma > 0.0).then(|| gaussian_vector(&mut rng(seed, 1), matrix.nrows()) * noise_sigma);
    let y = match &e {
        Some(e) => &clean + e,
        None => clean,
    };
    let check = match &e {
        Some(e) => &y - e - matrix.dot(&signal.x),
        None => &y - &matrix.dot(&signal.x),
    };
    if norm(check.view()) > 1e-12 * norm(signal.x.view()).max(f64::MIN_POSITIVE) {
        return Err(Error::Parameter("measurement identity violated".into()));
    }
    Ok(MeasurementModel {
        matrix,
        e,
        y,
        x: Some(signal.x.clone()),
        ensemble: ensemble.clone(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_tree_signal;

    #[test]
    fn gaussian_measurements_are_noiseless_and_reproducible() {
        let s = make_tree_signal(7, 13, 2, 1.0, 0.2, 0).unwrap();
        let ens = Ensemble::IidGaussian { m: 50, seed: 9 };
        let a = make_measurements(&s, &ens, 0.0, 1).unwrap();
        let b = make_measurements(&s, &ens, 0.0, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.m(), 50);
        assert!(a.residual_sq(s.x.view()).sqrt() <= 1e-12 * norm(s.x.view()));
    }

    #[test]
    fn redundant_dct_has_unit_columns() {
        let s = SignalInstance::custom(Array1::zeros(128));
        let model = make_measurements(&s, &Ensemble::RedundantDct { redundancy: 2 }, 0.0, 0).unwrap();
        assert_eq!(model.m(), 64);
        for c in model.matrix.columns() {
            assert!((norm(c) - 1.0).abs() < 1e-12);
        }
        assert!(make_measurements(&s, &Ensemble::RedundantDct { redundancy: 3 }, 0.0, 0).is_err());
    }

    #[test]
    fn composed_matches_dense_product() {
        let synthesis = Transform::Adjoint {
            inner: Box::new(Transform::Dct2 { rows: 4, cols: 4 }),
        };
        let ens = Ensemble::Composed {
            m: 7,
            seed: 3,
            synthesis: synthesis.clone(),
        };
        let m = ens.build(16).unwrap();
        let a = gaussian_matrix(&mut rng(3, 0), 7, 16);
        let dense = a.dot(&synthesis.matrix());
        assert!((&m - &dense).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn document_round_trip() {
        let s = make_tree_signal(4, 3, 1, 1.0, 0.5, 2).unwrap();
        let model =
            make_measurements(&s, &Ensemble::IidGaussian { m: 6, seed: 4 }, 0.1, 8).unwrap();
        let json = serde_json::to_string(&model.to_document()).unwrap();
        let doc: MeasurementDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(MeasurementModel::from_document(&doc).unwrap(), model);
    }
}
