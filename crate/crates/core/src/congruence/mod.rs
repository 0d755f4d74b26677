//! Conservation laws as a congruence of lines.
//!
//! A pair `(N, M)` with `∂_i M = λ^i ∂_i N` is a conservation law; `n` of
//! them give the line `Y^k = N^k Y^0 + M^k Y^{n+1}` through every point of
//! the `u` box. This module solves the density equation, builds the focal
//! charts, applies the Laplace transformation to pairs and reads the new
//! speeds back off them, and applies reciprocal transformations.
//!
//! Pairs are either closed-form expressions or lattice grids. Closed forms
//! differentiate exactly; grids use fourth-order differences.

mod density;
mod focal;
mod pair;
mod reciprocal;
mod transform;

use thiserror::Error;

use crate::integrate::BLOW_UP;
use crate::system::SystemError;

pub use density::{solve_density, DensityOptions};
pub use focal::{focal_chart, write_obj, FocalChart};
pub use pair::{ConservationPair, PairField, PairResiduals};
pub use reciprocal::{reciprocal_speeds, Reciprocal};
pub use transform::{
    expected_speeds, laplace_transform_congruence, speed_spread, verify_speed_invariance,
    InvarianceReport, RelationReport,
};

#[derive(Debug, Error)]
pub enum CongruenceError {
    #[error("prerequisite violated: {0}")]
    Prerequisite(String),
    #[error("a_{i}{j} vanishes: the ({i}, {j}) transformation is undefined")]
    PrereqViolated { i: usize, j: usize },
    #[error("densities are functionally dependent at {witness:?}")]
    DependentDensities { witness: Vec<f64> },
    #[error("blow-up: a value exceeded {BLOW_UP:e}")]
    BlowUp,
    #[error("not a conservation law: {what} residual {residual:e} at {witness:?}")]
    NotConservationLaw {
        what: String,
        residual: f64,
        witness: Option<Vec<f64>>,
    },
    #[error("denominator {what} vanishes at {witness:?}")]
    DenominatorVanishes { what: String, witness: Vec<f64> },
    #[error("{0}")]
    Eval(String),
    #[error(transparent)]
    System(#[from] SystemError),
}
