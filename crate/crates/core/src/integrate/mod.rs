//! Numerical integration of the closed Pfaffian systems behind the solution
//! constructions: Lamé coefficients, commuting flows, orbit systems for
//! `u(x, t)` and the two-component quadrature.
//!
//! Everything runs on rectangular lattices. Values are carried from the
//! base along staircase paths; a second path order gives the defect.

mod frobenius;
mod grid;
mod lame;
mod orbit;
mod quad;
mod quadrature;
mod staircase;

use thiserror::Error;

use crate::system::SystemError;

pub use frobenius::{integrate_frobenius_mu, IndexTerm, MuField, PfaffianSpec};
pub use grid::{write_grids_csv, Lattice, ScalarFieldGrid};
pub use lame::{lame_coefficients, LameField, LameGrid};
pub use orbit::{
    integrate_orbit_solution, p_for_b_zero, BZeroComponent, BZeroP, BZeroSlope, FnSlope,
    OrbitSolution, SlopeField,
};
pub use quad::adaptive_simpson;
pub use quadrature::{solve_n2_quadrature, InversionCheck, N2Quadrature};
pub use staircase::{
    integrate_to, path_defect, rk4_leg, sweep, PathOrder, Pfaffian, Sweep, BLOW_UP,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("prerequisite violated: {0}")]
    Prerequisite(String),
    #[error("quadrature failed at {point:?}: {reason}")]
    Quadrature { point: Vec<f64>, reason: String },
    #[error("blow-up: {count} lattice points exceeded {BLOW_UP:e}")]
    BlowUp { count: usize },
    #[error("denominator of P^{i} vanishes identically")]
    DenominatorIdenticallyZero { i: usize },
    #[error("P^{i} breaks down at t = {t}, u = {u:?}")]
    Breakdown { i: usize, t: f64, u: Vec<f64> },
    #[error("Jacobian of (x, t) with respect to u is singular at every lattice point")]
    JacobianSingularEverywhere,
    #[error("form is not closed: defect {defect:e}")]
    NotClosed { defect: f64 },
    #[error("{0}")]
    System(String),
}

impl From<SystemError> for IntegrateError {
    fn from(e: SystemError) -> Self {
        IntegrateError::System(e.to_string())
    }
}

/// Step control shared by the integrators.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct IntegrateOptions {
    /// RK4 substeps per lattice cell.
    pub substeps: usize,
    /// Defects above `100 · tol` raise a non-integrability warning.
    pub tol: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            substeps: 16,
            tol: 1e-9,
        }
    }
}

pub(crate) fn defect_warning(defect: f64, tol: f64) -> Option<String> {
    (defect > 100.0 * tol).then(|| {
        format!(
            "path-independence defect {defect:e} exceeds {:e}; the system looks non-integrable",
            100.0 * tol
        )
    })
}

/// Fourth-order centred first derivative along `axis` at `idx`, or `None`
/// within two points of the boundary or next to a masked value.
pub(crate) fn fd4(g: &ScalarFieldGrid, idx: &[usize], axis: usize) -> Option<f64> {
    let l = &g.lattice;
    if idx[axis] < 2 || idx[axis] + 2 >= l.counts[axis] {
        return None;
    }
    let at = |o: isize| {
        let mut j = idx.to_vec();
        j[axis] = (idx[axis] as isize + o) as usize;
        g.get(&j)
    };
    let v = [at(-2), at(-1), at(1), at(2)];
    if v.iter().any(|x| !x.is_finite()) {
        return None;
    }
    Some((v[0] - 8.0 * v[1] + 8.0 * v[2] - v[3]) / (12.0 * l.steps[axis]))
}
