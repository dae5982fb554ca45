//! Orthonormal DCT/Haar bases and the redundant DCT dictionary.
//!
//! Every transform is a linear map `T: R^input_dim -> R^output_dim`.
//! For the orthonormal kinds `apply` is the analysis operator (signal to
//! coefficients) and `adjoint` is its inverse. For the redundant dictionary
//! `apply` synthesises a signal from `d` coefficients.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, param, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Transform {
    Identity { n: usize },
    /// Orthonormal DCT-II of length `n`.
    Dct { n: usize },
    /// Separable orthonormal DCT-II on a row-major `rows × cols` array.
    Dct2 { rows: usize, cols: usize },
    /// Full-depth orthonormal Haar, `n` a power of two, coefficients ordered coarse to fine.
    Haar { n: usize },
    /// Square 2D Haar pyramid on an `n × n` row-major array, coefficients ordered coarse to fine.
    Haar2 { n: usize },
    /// `rows × cols` dictionary with unit-norm columns `cos(π·i·(j+½)/cols)`.
    RedundantDct { rows: usize, cols: usize },
    Adjoint { inner: Box<Transform> },
    /// Composition applied left to right: `apply(v) = T_last(...T_first(v))`.
    Chain { stages: Vec<Transform> },
}

impl Transform {
    pub fn validate(&self) -> Result<()> {
        match self {
            Transform::Identity { n } | Transform::Dct { n } if *n == 0 => {
                Err(param("transform length must be positive"))
            }
            Transform::Dct2 { rows, cols } if *rows == 0 || *cols == 0 => {
                Err(param("transform shape must be positive"))
            }
            Transform::Haar { n } | Transform::Haar2 { n } if !n.is_power_of_two() => {
                Err(param(format!("Haar length {n} is not a power of two")))
            }
            Transform::RedundantDct { rows, cols } if *rows == 0 || *cols < *rows => Err(param(
                format!("redundant dictionary needs 0 < rows <= cols, got {rows}x{cols}"),
            )),
            Transform::Adjoint { inner } => inner.validate(),
            Transform::Chain { stages } => {
                if stages.is_empty() {
                    return Err(param("empty transform chain"));
                }
                for s in stages {
                    s.validate()?;
                }
                for w in stages.windows(2) {
                    if w[0].output_dim() != w[1].input_dim() {
                        return Err(param("transform chain stages do not compose"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Transform::Identity { n } | Transform::Dct { n } | Transform::Haar { n } => *n,
            Transform::Dct2 { rows, cols } => rows * cols,
            Transform::Haar2 { n } => n * n,
            Transform::RedundantDct { cols, .. } => *cols,
            Transform::Adjoint { inner } => inner.output_dim(),
            Transform::Chain { stages } => stages.first().map_or(0, |s| s.input_dim()),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Transform::RedundantDct { rows, .. } => *rows,
            Transform::Adjoint { inner } => inner.input_dim(),
            Transform::Chain { stages } => stages.last().map_or(0, |s| s.output_dim()),
            other => other.input_dim(),
        }
    }

    pub fn is_orthonormal(&self) -> bool {
        match self {
            Transform::RedundantDct { rows, cols } => rows == cols && *rows == 1,
            Transform::Adjoint { inner } => inner.is_orthonormal(),
            Transform::Chain { stages } => stages.iter().all(|s| s.is_orthonormal()),
            _ => true,
        }
    }

    pub fn apply(&self, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_len("transform input", self.input_dim(), v.len())?;
        Ok(self.apply_unchecked(v))
    }

    pub fn adjoint(&self, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_len("transform adjoint input", self.output_dim(), v.len())?;
        Ok(self.adjoint_unchecked(v))
    }

    pub(crate) fn apply_unchecked(&self, v: ArrayView1<f64>) -> Array1<f64> {
        match self {
            Transform::Identity { .. } => v.to_owned(),
            Transform::Dct { n } => dct_matrix(*n).dot(&v),
            Transform::Dct2 { rows, cols } => {
                let (r, c) = (dct_matrix(*rows), dct_matrix(*cols));
                separable(v, *rows, *cols, |x| if x.len() == *cols { c.dot(&x) } else { r.dot(&x) })
            }
            Transform::Haar { .. } => haar_forward(v.to_owned()),
            Transform::Haar2 { n } => haar2_forward(v, *n),
            Transform::RedundantDct { rows, cols } => redundant_dct_matrix(*rows, *cols).dot(&v),
            Transform::Adjoint { inner } => inner.adjoint_unchecked(v),
            Transform::Chain { stages } => {
                let mut out = v.to_owned();
                for s in stages {
                    out = s.apply_unchecked(out.view());
                }
                out
            }
        }
    }

    pub(crate) fn adjoint_unchecked(&self, v: ArrayView1<f64>) -> Array1<f64> {
        match self {
            Transform::Identity { .. } => v.to_owned(),
            Transform::Dct { n } => dct_matrix(*n).t().dot(&v),
            Transform::Dct2 { rows, cols } => {
                let (r, c) = (dct_matrix(*rows), dct_matrix(*cols));
                separable(v, *rows, *cols, |x| {
                    if x.len() == *cols { c.t().dot(&x) } else { r.t().dot(&x) }
                })
            }
            Transform::Haar { .. } => haar_inverse(v.to_owned()),
            Transform::Haar2 { n } => haar2_inverse(v, *n),
            Transform::RedundantDct { rows, cols } => redundant_dct_matrix(*rows, *cols).t().dot(&v),
            Transform::Adjoint { inner } => inner.apply_unchecked(v),
            Transform::Chain { stages } => {
                let mut out = v.to_owned();
                for s in stages.iter().rev() {
                    out = s.adjoint_unchecked(out.view());
                }
                out
            }
        }
    }

    /// Dense `output_dim × input_dim` matrix of the transform.
    pub fn matrix(&self) -> Array2<f64> {
        match self {
            Transform::Dct { n } => dct_matrix(*n),
            Transform::RedundantDct { rows, cols } => redundant_dct_matrix(*rows, *cols),
            _ => {
                let (r, c) = (self.output_dim(), self.input_dim());
                let mut out = Array2::zeros((r, c));
                let mut e = Array1::zeros(c);
                for j in 0..c {
                    e[j] = 1.0;
                    out.column_mut(j).assign(&self.apply_unchecked(e.view()));
                    e[j] = 0.0;
                }
                out
            }
        }
    }

    /// Rough multiply-add count of one application, used for operation budgets.
    pub fn cost(&self) -> u64 {
        let n = self.input_dim() as u64;
        match self {
            Transform::Identity { .. } => 0,
            Transform::Dct { n } => (*n as u64).pow(2),
            Transform::Dct2 { rows, cols } => {
                let (r, c) = (*rows as u64, *cols as u64);
                r * c * (r + c)
            }
            Transform::Haar { .. } | Transform::Haar2 { .. } => 2 * n,
            Transform::RedundantDct { rows, cols } => (*rows as u64) * (*cols as u64),
            Transform::Adjoint { inner } => inner.cost(),
            Transform::Chain { stages } => stages.iter().map(Transform::cost).sum(),
        }
    }
}

/// Orthonormal DCT-II matrix, row `k` is frequency `k`.
pub fn dct_matrix(n: usize) -> Array2<f64> {
    let a0 = (1.0 / n as f64).sqrt();
    let a = (2.0 / n as f64).sqrt();
    Array2::from_shape_fn((n, n), |(k, i)| {
        let scale = if k == 0 { a0 } else { a };
        scale * (PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos()
    })
}

/// `rows × cols` cosine dictionary with entries `cos(π·i·(j+½)/cols)`, columns normalised.
pub fn redundant_dct_matrix(rows: usize, cols: usize) -> Array2<f64> {
    let mut m = Array2::from_shape_fn((rows, cols), |(i, j)| {
        (PI * i as f64 * (j as f64 + 0.5) / cols as f64).cos()
    });
    for mut col in m.columns_mut() {
        let n = col.dot(&col).sqrt();
        col /= n;
    }
    m
}

fn separable(
    v: ArrayView1<f64>,
    rows: usize,
    cols: usize,
    f: impl Fn(ArrayView1<f64>) -> Array1<f64>,
) -> Array1<f64> {
    let mut img = v.to_owned().into_shape_with_order((rows, cols)).expect("shape checked");
    for mut row in img.rows_mut() {
        let t = f(row.view());
        row.assign(&t);
    }
    for mut col in img.columns_mut() {
        let t = f(col.view());
        col.assign(&t);
    }
    img.into_shape_with_order(rows * cols).expect("contiguous")
}

fn haar_step(v: &mut [f64], len: usize, scratch: &mut Vec<f64>) {
    let h = len / 2;
    scratch.clear();
    scratch.extend_from_slice(&v[..len]);
    for i in 0..h {
        let (a, b) = (scratch[2 * i], scratch[2 * i + 1]);
        v[i] = (a + b) * FRAC_1_SQRT_2;
        v[h + i] = (a - b) * FRAC_1_SQRT_2;
    }
}

fn haar_unstep(v: &mut [f64], len: usize, scratch: &mut Vec<f64>) {
    let h = len / 2;
    scratch.clear();
    scratch.extend_from_slice(&v[..len]);
    for i in 0..h {
        let (s, d) = (scratch[i], scratch[h + i]);
        v[2 * i] = (s + d) * FRAC_1_SQRT_2;
        v[2 * i + 1] = (s - d) * FRAC_1_SQRT_2;
    }
}

fn haar_forward(mut v: Array1<f64>) -> Array1<f64> {
    let slice = v.as_slice_mut().expect("owned arrays are contiguous");
    let mut scratch = Vec::with_capacity(slice.len());
    let mut len = slice.len();
    while len >= 2 {
        haar_step(slice, len, &mut scratch);
        len /= 2;
    }
    v
}

fn haar_inverse(mut v: Array1<f64>) -> Array1<f64> {
    let slice = v.as_slice_mut().expect("owned arrays are contiguous");
    let mut scratch = Vec::with_capacity(slice.len());
    let mut len = 2;
    while len <= slice.len() {
        haar_unstep(slice, len, &mut scratch);
        len *= 2;
    }
    v
}

fn scale_of(i: usize) -> usize {
    if i == 0 {
        0
    } else {
        (usize::BITS - i.leading_zeros()) as usize
    }
}

/// Positions of the Mallat layout listed in coarse-to-fine order.
fn haar2_order(n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n * n).collect();
    idx.sort_by_key(|&p| {
        let (r, c) = (p / n, p % n);
        (scale_of(r).max(scale_of(c)), p)
    });
    idx
}

fn haar2_forward(v: ArrayView1<f64>, n: usize) -> Array1<f64> {
    let mut img = v.to_vec();
    let mut scratch = Vec::with_capacity(n);
    let mut col = vec![0.0; n];
    let mut len = n;
    while len >= 2 {
        for r in 0..len {
            haar_step(&mut img[r * n..r * n + len], len, &mut scratch);
        }
        for c in 0..len {
            for r in 0..len {
                col[r] = img[r * n + c];
            }
            haar_step(&mut col, len, &mut scratch);
            for r in 0..len {
                img[r * n + c] = col[r];
            }
        }
        len /= 2;
    }
    haar2_order(n).into_iter().map(|p| img[p]).collect()
}

fn haar2_inverse(v: ArrayView1<f64>, n: usize) -> Array1<f64> {
    let mut img = vec![0.0; n * n];
    for (k, p) in haar2_order(n).into_iter().enumerate() {
        img[p] = v[k];
    }
    let mut scratch = Vec::with_capacity(n);
    let mut col = vec![0.0; n];
    let mut len = 2;
    while len <= n {
        for c in 0..len {
            for r in 0..len {
                col[r] = img[r * n + c];
            }
            haar_unstep(&mut col, len, &mut scratch);
            for r in 0..len {
                img[r * n + c] = col[r];
            }
        }
        for r in 0..len {
            haar_unstep(&mut img[r * n..r * n + len], len, &mut scratch);
        }
        len *= 2;
    }
    Array1::from(img)
}
