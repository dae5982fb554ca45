//! Iterative recovery for linear inverse problems `y = Mx + e` with
//! structured constraint sets: projected gradient descent, ISTA, inexact
//! projected gradient descent and their unrolled learned counterparts, plus
//! the cone-geometry estimators that bound their convergence.

pub mod error;
pub mod experiment;
pub mod geom;
pub mod learn;
pub mod linalg;
pub mod model;
pub mod proj;
pub mod solve;

pub use error::{Error, Result};
