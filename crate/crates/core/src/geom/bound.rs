use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Which error bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    /// PGD over a descent cone: `(κρ)^t‖x‖`.
    Pgd,
    /// PGD over `K − K`: `(κρ)^t‖x‖`.
    PgdSet,
    /// Inexact PGD, convex set: `(ρ_p^t + (1 − ρ_p^t)/(1 − ρ_p)·(2 + ρ_p)ε)‖x‖`.
    Ipgd,
    /// Inexact PGD over `K`: `((κρ_p)^t + (1 − (κρ_p)^t)/(1 − κρ_p)·γ)‖x‖`.
    IpgdSet,
}

impl Theorem {
    /// Theorems numbered 1 to 4.
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Theorem::Pgd),
            2 => Ok(Theorem::PgdSet),
            3 => Ok(Theorem::Ipgd),
            4 => Ok(Theorem::IpgdSet),
            _ => Err(param(format!("no bound numbered {n}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParameters {
    pub rho: f64,
    pub rho_p: f64,
    pub kappa: u8,
    pub epsilon: f64,
    /// `(2ρκ + ρ_pκ + 1)ε`
    pub gamma: f64,
    pub norm_x: f64,
}

impl BoundParameters {
    pub fn new(rho: f64, rho_p: f64, kappa: u8, epsilon: f64, norm_x: f64) -> Result<Self> {
        if ![rho, rho_p, epsilon, norm_x].iter().all(|v| *v >= 0.0 && v.is_finite()) {
            return Err(param("bound parameters must be finite and nonnegative"));
        }
        if kappa != 1 && kappa != 2 {
            return Err(param(format!("κ must be 1 or 2, got {kappa}")));
        }
        let k = kappa as f64;
        Ok(Self {
            rho,
            rho_p,
            kappa,
            epsilon,
            gamma: (2.0 * rho * k + rho_p * k + 1.0) * epsilon,
            norm_x,
        })
    }
}

/// `Σ_{i<t} q^i`, with the limit `t` at `q = 1`.
fn geometric(q: f64, t: usize) -> f64 {
    if q == 1.0 {
        t as f64
    } else {
        (1.0 - q.powi(t as i32)) / (1.0 - q)
    }
}

pub fn evaluate_bound(theorem: Theorem, params: &BoundParameters, t: usize) -> Result<f64> {
    let p = params;
    if ![p.rho, p.rho_p, p.epsilon, p.gamma, p.norm_x].iter().all(|v| *v >= 0.0) {
        return Err(param("bound parameters must be nonnegative"));
    }
    if p.kappa != 1 && p.kappa != 2 {
        return Err(param(format!("κ must be 1 or 2, got {}", p.kappa)));
    }
    let k = p.kappa as f64;
    let factor = match theorem {
        Theorem::Pgd | Theorem::PgdSet => (k * p.rho).powi(t as i32),
        Theorem::Ipgd => p.rho_p.powi(t as i32) + geometric(p.rho_p, t) * (2.0 + p.rho_p) * p.epsilon,
        Theorem::IpgdSet => {
            let q = k * p.rho_p;
            q.powi(t as i32) + geometric(q, t) * p.gamma
        }
    };
    Ok(factor * p.norm_x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateWidth {
    /// `1 − (√m − ω)/(m + d)`
    pub rho_conservative: f64,
    /// `ω/√m`
    pub rho_aggressive_order: f64,
}

/// Rate-versus-width expressions with unit constants, for trend checks only.
pub fn rate_width_relation(m: usize, d: usize, omega: f64) -> Result<RateWidth> {
    if m == 0 || d == 0 || !(omega >= 0.0) {
        return Err(param("need m, d ≥ 1 and ω ≥ 0"));
    }
    let sm = (m as f64).sqrt();
    Ok(RateWidth {
        rho_conservative: 1.0 - (sm - omega) / (m + d) as f64,
        rho_aggressive_order: omega / sm,
    })
}
