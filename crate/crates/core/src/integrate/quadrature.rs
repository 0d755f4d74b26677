//! Two-component systems with `b_12 = b_21 = 0` solved by quadratures.
//!
//! With `ω = λ¹_1 du¹/(λ²−λ¹) + λ²_2 du²/(λ¹−λ²)` closed and `W = exp ∫ω`,
//! the hodograph map `u ↦ (t, x)` satisfies
//!
//! ```text
//! dt = φ_1 du¹/(H_1(λ¹−λ²)) + φ_2 du²/(H_2(λ²−λ¹)) + t ω
//! dx = λ²φ_1 du¹/(H_1(λ²−λ¹)) + λ¹φ_2 du²/(H_2(λ¹−λ²))
//!      + t (λ²λ¹_1 du¹/(λ¹−λ²) + λ¹λ²_2 du²/(λ²−λ¹))
//! ```
//!
//! The state `(ln W, t, x)` is carried along staircases from the base point,
//! where `t = x = 0` and `W = 1`.

use rayon::prelude::*;
use serde::Serialize;

use super::grid::{Lattice, ScalarFieldGrid};
use super::lame::LameField;
use super::staircase::{path_defect, sweep, PathOrder, Pfaffian};
use super::{defect_warning, fd4, IntegrateError, IntegrateOptions};
use crate::expr::Expr;
use crate::system::{identity_residual, CoeffTable, DiagonalSystem, SampleSet};

/// `|J|` below this fraction of `max(|x_1 t_2|, |x_2 t_1|)` counts as singular.
const SINGULAR: f64 = 1e-8;

struct Hodograph<'a> {
    lambdas: [&'a Expr; 2],
    dl: [&'a Expr; 2],
    h: [&'a LameField; 2],
    phi: [&'a Expr; 2],
}

impl Pfaffian for Hodograph<'_> {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, axis: usize, u: &[f64], y: &[f64], out: &mut [f64]) -> Result<(), String> {
        let ev = |e: &Expr, p: &[f64]| e.eval(p).map_err(|e| e.to_string());
        let l1 = ev(self.lambdas[0], u)?;
        let l2 = ev(self.lambdas[1], u)?;
        let d = l1 - l2;
        let dl = if self.dl[axis].is_zero() {
            0.0
        } else {
            ev(self.dl[axis], u)?
        };
        let h = if self.h[axis].is_trivial() {
            1.0
        } else {
            self.h[axis].h(u).map_err(|e| e.to_string())?
        };
        let phi = ev(self.phi[axis], &[u[axis]])?;
        let t = y[1];
        if axis == 0 {
            let w = -dl / d;
            out[0] = w;
            out[1] = phi / (h * d) + t * w;
            out[2] = -l2 * phi / (h * d) + t * l2 * dl / d;
        } else {
            let w = dl / d;
            out[0] = w;
            out[1] = -phi / (h * d) + t * w;
            out[2] = l1 * phi / (h * d) - t * l1 * dl / d;
        }
        Ok(())
    }
}

/// Check of the inverted map against the PDE.
#[derive(Clone, Debug, Serialize)]
pub struct InversionCheck {
    /// Points where the Jacobian `∂(x, t)/∂(u¹, u²)` is nonsingular and a
    /// fourth-order stencil fits.
    pub nonsingular: usize,
    pub checked: usize,
    /// Worst PDE residual of the inverse, scaled as in the solution check:
    /// `|∂_j x + λ^i ∂_j t| / (|J| + |∂_j x| + |λ^i ∂_j t|)`, `j ≠ i`.
    pub max_residual: f64,
    pub witness: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct N2Quadrature {
    pub t: ScalarFieldGrid,
    pub x: ScalarFieldGrid,
    pub ln_w: ScalarFieldGrid,
    /// Residual of `∂_2 ω_1 = ∂_1 ω_2` at the system's samples.
    pub omega_closedness: f64,
    pub path_defect: f64,
    pub warning: Option<String>,
    pub inversion: Option<InversionCheck>,
}

impl N2Quadrature {
    /// The inversion check, or an error when no point can be inverted.
    pub fn inversion(&self) -> Result<&InversionCheck, IntegrateError> {
        self.inversion
            .as_ref()
            .ok_or(IntegrateError::JacobianSingularEverywhere)
    }
}

/// `t(u)` and `x(u)` on `lattice`, pinned to zero at its base.
#[allow(clippy::too_many_arguments)]
pub fn solve_n2_quadrature(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    samples: &SampleSet,
    h1: &LameField,
    h2: &LameField,
    phi1: &Expr,
    phi2: &Expr,
    lattice: &Lattice,
    opts: &IntegrateOptions,
) -> Result<N2Quadrature, IntegrateError> {
    if sys.n != 2 || lattice.dim() != 2 {
        return Err(IntegrateError::Prerequisite(format!(
            "quadrature route needs n = 2, got {}",
            sys.n
        )));
    }
    for (i, k) in [(1, 2), (2, 1)] {
        if let Some(b) = table.b(i, k) {
            if !b.is_numerically_zero(&samples.points, sys.tol) {
                return Err(IntegrateError::Prerequisite(format!(
                    "b_{i}{k} = {b} does not vanish"
                )));
            }
        }
    }
    if phi1.max_var() > 1 || phi2.max_var() > 1 {
        return Err(IntegrateError::Prerequisite(
            "φ must be written in u1".into(),
        ));
    }
    let (l1, l2) = (sys.lambda(1), sys.lambda(2));
    let omega1 = (-table.dlambda(1, 1).clone() / (l1.clone() - l2.clone())).simplify();
    let omega2 = (table.dlambda(2, 2).clone() / (l1.clone() - l2.clone())).simplify();
    let closed = identity_residual(
        &[omega1.derivative(2), -omega2.derivative(1)],
        &samples.points,
    );
    if !closed.within(sys.tol) {
        return Err(IntegrateError::NotClosed { defect: closed.max });
    }

    let p = Hodograph {
        lambdas: [l1, l2],
        dl: [table.dlambda(1, 1), table.dlambda(2, 2)],
        h: [h1, h2],
        phi: [phi1, phi2],
    };
    let (canon, rev) = rayon::join(
        || sweep(&p, lattice, &[0.0; 3], opts.substeps, &PathOrder::Canonical),
        || sweep(&p, lattice, &[0.0; 3], opts.substeps, &PathOrder::Reversed),
    );
    if canon.blowups > 0 {
        return Err(IntegrateError::BlowUp {
            count: canon.blowups,
        });
    }
    let defect = path_defect(&canon, &rev);
    let grid = |c| ScalarFieldGrid::new(lattice.clone(), canon.component(c), defect);
    let (ln_w, t, x) = (grid(0), grid(1), grid(2));
    let inversion = invert(sys, &t, &x);
    Ok(N2Quadrature {
        t,
        x,
        ln_w,
        omega_closedness: closed.max,
        path_defect: defect,
        warning: defect_warning(defect, opts.tol),
        inversion,
    })
}

fn invert(
    sys: &DiagonalSystem,
    t: &ScalarFieldGrid,
    x: &ScalarFieldGrid,
) -> Option<InversionCheck> {
    let l = &t.lattice;
    let per_point: Vec<(bool, Option<(f64, Vec<f64>)>)> = (0..l.len())
        .into_par_iter()
        .map(|f| {
            let idx = l.multi(f);
            let d = (
                fd4(x, &idx, 0),
                fd4(x, &idx, 1),
                fd4(t, &idx, 0),
                fd4(t, &idx, 1),
            );
            let (Some(x1), Some(x2), Some(t1), Some(t2)) = d else {
                return (false, None);
            };
            let jac = x1 * t2 - x2 * t1;
            if !(jac.abs() > SINGULAR * (x1 * t2).abs().max((x2 * t1).abs())) || jac == 0.0 {
                return (false, None);
            }
            let u = l.point(&idx);
            let Ok(lam) = sys.speeds(&u) else {
                return (true, None);
            };
            // u¹ is constant along ∂_2, u² along ∂_1
            let r1 = (x2 + lam[0] * t2).abs() / (jac.abs() + x2.abs() + (lam[0] * t2).abs());
            let r2 = (x1 + lam[1] * t1).abs() / (jac.abs() + x1.abs() + (lam[1] * t1).abs());
            (true, Some((r1.max(r2), u)))
        })
        .collect();
    let nonsingular = per_point.iter().filter(|p| p.0).count();
    if nonsingular == 0 {
        return None;
    }
    let mut check = InversionCheck {
        nonsingular,
        checked: 0,
        max_residual: 0.0,
        witness: None,
    };
    for (r, u) in per_point.into_iter().filter_map(|p| p.1) {
        check.checked += 1;
        if check.witness.is_none() || r > check.max_residual {
            check.max_residual = r;
            check.witness = Some(u);
        }
    }
    Some(check)
}
