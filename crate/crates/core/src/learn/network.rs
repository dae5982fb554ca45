use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, param, Error, Result};
use crate::linalg::l1_norm;
use crate::proj::{ceil_log2, l1_threshold, project_k_sparse, project_l1_ball, proximal_l1, top_k_indices};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Nonlinearity {
    /// Soft thresholding at the learnable level `lambda`.
    SoftThreshold { lambda: f64 },
    HardTopK { k: usize },
    L1Ball { radius: f64 },
}

impl Nonlinearity {
    pub fn apply(&self, v: ArrayView1<f64>) -> Array1<f64> {
        match self {
            Nonlinearity::SoftThreshold { lambda } => proximal_l1(v, *lambda),
            Nonlinearity::HardTopK { k } => project_k_sparse(v, *k),
            Nonlinearity::L1Ball { radius } => project_l1_ball(v, *radius),
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            Nonlinearity::SoftThreshold { lambda } => Some(*lambda),
            _ => None,
        }
    }

    pub fn cost(&self, d: usize) -> u64 {
        let d64 = d as u64;
        match self {
            Nonlinearity::SoftThreshold { .. } => d64,
            Nonlinearity::HardTopK { .. } => d64 * ceil_log2(d) + d64,
            Nonlinearity::L1Ball { .. } => d64 * ceil_log2(d) + 2 * d64,
        }
    }

    /// Vector-Jacobian product at pre-activation `v`: returns `Jᵀg` and the
    /// derivative with respect to the threshold.
    fn vjp(&self, v: ArrayView1<f64>, g: ArrayView1<f64>) -> (Array1<f64>, f64) {
        match self {
            Nonlinearity::SoftThreshold { lambda } => {
                let mut out = Array1::zeros(v.len());
                let mut dl = 0.0;
                for i in 0..v.len() {
                    if v[i].abs() > *lambda {
                        out[i] = g[i];
                        dl -= v[i].signum() * g[i];
                    }
                }
                (out, dl)
            }
            Nonlinearity::HardTopK { k } => {
                let mut out = Array1::zeros(v.len());
                for i in top_k_indices(v, *k) {
                    out[i] = g[i];
                }
                (out, 0.0)
            }
            Nonlinearity::L1Ball { radius } => {
                if l1_norm(v) <= *radius {
                    return (g.to_owned(), 0.0);
                }
                let tau = l1_threshold(v, *radius);
                // J = diag(1_A) − s sᵀ / |A| on the active set A
                let active: Vec<usize> = (0..v.len()).filter(|&i| v[i].abs() > tau).collect();
                let mut out = Array1::zeros(v.len());
                if active.is_empty() {
                    return (out, 0.0);
                }
                let sg: f64 = active.iter().map(|&i| v[i].signum() * g[i]).sum();
                let n = active.len() as f64;
                for &i in &active {
                    out[i] = g[i] - v[i].signum() * sg / n;
                }
                (out, 0.0)
            }
        }
    }
}

/// Weight-tied unrolled iteration `z_{t+1} = σ(Ay + Uz_t)`, `z_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnrolledNetwork {
    /// `d × m`
    pub a: Array2<f64>,
    /// `d × d`
    pub u: Array2<f64>,
    pub nonlinearity: Nonlinearity,
    pub layers: usize,
}

/// Cached forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    /// `z_0, …, z_T`
    pub outputs: Vec<Array1<f64>>,
    /// `Ay + Uz_t` for `t = 0..T`
    pub pre: Vec<Array1<f64>>,
}

impl Forward {
    pub fn output(&self) -> &Array1<f64> {
        self.outputs.last().expect("forward pass stores z_0")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub a: Array2<f64>,
    pub u: Array2<f64>,
    pub lambda: f64,
}

impl Gradients {
    pub fn zeros(d: usize, m: usize) -> Self {
        Self {
            a: Array2::zeros((d, m)),
            u: Array2::zeros((d, d)),
            lambda: 0.0,
        }
    }

    pub fn add_scaled(&mut self, other: &Gradients, s: f64) {
        self.a.scaled_add(s, &other.a);
        self.u.scaled_add(s, &other.u);
        self.lambda += s * other.lambda;
    }
}

impl UnrolledNetwork {
    pub fn new(a: Array2<f64>, u: Array2<f64>, nonlinearity: Nonlinearity, layers: usize) -> Result<Self> {
        let d = a.nrows();
        check_len("U rows", d, u.nrows())?;
        check_len("U columns", d, u.ncols())?;
        if layers == 0 {
            return Err(param("network needs at least one layer"));
        }
        Ok(Self {
            a,
            u,
            nonlinearity,
            layers,
        })
    }

    /// `A = μMᵀ`, `U = I − μMᵀM`.
    pub fn from_gradient_step(
        matrix: ArrayView2<f64>,
        mu: f64,
        nonlinearity: Nonlinearity,
        layers: usize,
    ) -> Result<Self> {
        let a = matrix.t().to_owned() * mu;
        let u = Array2::eye(matrix.ncols()) - matrix.t().dot(&matrix) * mu;
        Self::new(a, u, nonlinearity, layers)
    }

    /// ISTA for `½‖y − Mz‖² + λ‖z‖₁` with step `μ`: threshold `μλ`.
    pub fn from_ista(matrix: ArrayView2<f64>, mu: f64, lambda: f64, layers: usize) -> Result<Self> {
        Self::from_gradient_step(
            matrix,
            mu,
            Nonlinearity::SoftThreshold { lambda: mu * lambda },
            layers,
        )
    }

    pub fn d(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.a.ncols()
    }

    pub fn check_dims(&self, d: usize, m: usize) -> Result<()> {
        check_len("network signal dimension", self.d(), d)?;
        check_len("network measurement dimension", self.m(), m)
    }

    /// One layer given the precomputed `Ay`.
    pub fn layer(&self, ay: ArrayView1<f64>, z: ArrayView1<f64>) -> Array1<f64> {
        let v = &ay + &self.u.dot(&z);
        self.nonlinearity.apply(v.view())
    }

    pub fn forward(&self, y: ArrayView1<f64>) -> Result<Forward> {
        check_len("network input", self.m(), y.len())?;
        let ay = self.a.dot(&y);
        let mut outputs = vec![Array1::zeros(self.d())];
        let mut pre = Vec::with_capacity(self.layers);
        for t in 0..self.layers {
            let v = &ay + &self.u.dot(&outputs[t]);
            outputs.push(self.nonlinearity.apply(v.view()));
            pre.push(v);
        }
        Ok(Forward { outputs, pre })
    }

    pub fn output(&self, y: ArrayView1<f64>) -> Result<Array1<f64>> {
        let ay = self.a.dot(&y);
        check_len("network input", self.m(), y.len())?;
        let mut z = Array1::zeros(self.d());
        for _ in 0..self.layers {
            z = self.layer(ay.view(), z.view());
        }
        Ok(z)
    }

    /// Reverse-mode gradients of a loss with gradient `grad_out` at `z_T`.
    pub fn backward(&self, y: ArrayView1<f64>, fwd: &Forward, grad_out: ArrayView1<f64>) -> Result<Gradients> {
        if fwd.pre.len() != self.layers || fwd.outputs.len() != self.layers + 1 {
            return Err(Error::MissingActivations {
                expected: self.layers,
                found: fwd.pre.len(),
            });
        }
        check_len("network input", self.m(), y.len())?;
        check_len("loss gradient", self.d(), grad_out.len())?;
        let mut grads = Gradients::zeros(self.d(), self.m());
        let mut gz = grad_out.to_owned();
        let mut gv_sum = Array1::<f64>::zeros(self.d());
        for t in (0..self.layers).rev() {
            let (gv, dl) = self.nonlinearity.vjp(fwd.pre[t].view(), gz.view());
            grads.lambda += dl;
            gv_sum += &gv;
            outer_add(&mut grads.u, gv.view(), fwd.outputs[t].view());
            gz = self.u.t().dot(&gv);
        }
        outer_add(&mut grads.a, gv_sum.view(), y);
        Ok(grads)
    }

    pub fn apply_update(&mut self, step: &Gradients) {
        self.a += &step.a;
        self.u += &step.u;
        if let Nonlinearity::SoftThreshold { lambda } = &mut self.nonlinearity {
            *lambda = (*lambda + step.lambda).max(0.0);
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let rows = |m: &Array2<f64>| m.rows().into_iter().map(|r| r.to_vec()).collect();
        Checkpoint {
            a: rows(&self.a),
            u: rows(&self.u),
            lambda: self.nonlinearity.lambda(),
            t: self.layers,
            nonlinearity: self.nonlinearity.clone(),
        }
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        let dense = |rows: &Vec<Vec<f64>>, what: &str| -> Result<Array2<f64>> {
            let r = rows.len();
            let cols = rows.first().map_or(0, Vec::len);
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            Array2::from_shape_vec((r, cols), flat).map_err(|_| param(format!("ragged matrix {what}")))
        };
        let mut nonlinearity = c.nonlinearity.clone();
        if let (Nonlinearity::SoftThreshold { lambda }, Some(l)) = (&mut nonlinearity, c.lambda) {
            *lambda = l;
        }
        Self::new(dense(&c.a, "A")?, dense(&c.u, "U")?, nonlinearity, c.t)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_checkpoint())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_checkpoint(&serde_json::from_str(s)?)
    }
}

fn outer_add(target: &mut Array2<f64>, u: ArrayView1<f64>, v: ArrayView1<f64>) {
    for (i, &ui) in u.iter().enumerate() {
        if ui != 0.0 {
            target.row_mut(i).scaled_add(ui, &v);
        }
    }
}

/// Serialized network `{A, U, lambda, T, nonlinearity}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "U")]
    pub u: Vec<Vec<f64>>,
    pub lambda: Option<f64>,
    #[serde(rename = "T")]
    pub t: usize,
    pub nonlinearity: Nonlinearity,
}
