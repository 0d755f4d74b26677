//! Orbit systems `du^i = P^i (dx + λ^i dt)` integrated over an `(x, t)`
//! lattice, and the closed form of `P^i` when `b_ik ≡ 0`:
//!
//! ```text
//! P^i = H_i / (φ_i(u^i) − t λ^i_i H_i)
//! ```
//!
//! The denominator changes sign on the breakdown locus, where `u_x` becomes
//! infinite. Points past it are masked.

use serde::Serialize;

use super::grid::Lattice;
use super::lame::LameField;
use super::staircase::{path_defect, sweep, PathOrder, Pfaffian};
use super::{defect_warning, IntegrateError, IntegrateOptions};
use crate::expr::Expr;
use crate::hodograph::{verify_solution, PointStatus, SolutionGrid, Verification};
use crate::system::{CoeffTable, DiagonalSystem, SampleSet};

/// `P(x, t, u)` for all components at once.
pub trait SlopeField: Sync {
    fn n(&self) -> usize;
    fn slopes(&self, x: f64, t: f64, u: &[f64], out: &mut [f64]) -> Result<(), String>;
}

/// A slope field from a closure.
pub struct FnSlope<F> {
    pub n: usize,
    pub f: F,
}

impl<F> SlopeField for FnSlope<F>
where
    F: Fn(f64, f64, &[f64], &mut [f64]) -> Result<(), String> + Sync,
{
    fn n(&self) -> usize {
        self.n
    }

    fn slopes(&self, x: f64, t: f64, u: &[f64], out: &mut [f64]) -> Result<(), String> {
        (self.f)(x, t, u, out)
    }
}

/// One component `P^i(t, u)` of the `b = 0` closed form.
#[derive(Clone, Debug)]
pub struct BZeroComponent {
    pub i: usize,
    pub lame: LameField,
    pub phi: Expr,
    pub lambda_ii: Expr,
    /// Sign of the denominator on the side of the breakdown locus where the
    /// solution lives; `None` accepts either sign.
    pub side: Option<f64>,
}

impl BZeroComponent {
    fn denominator(&self, t: f64, u: &[f64]) -> Result<(f64, f64), IntegrateError> {
        let err = |e: crate::expr::EvalError| IntegrateError::Quadrature {
            point: u.to_vec(),
            reason: e.to_string(),
        };
        let h = if self.lame.is_trivial() {
            1.0
        } else {
            self.lame.h(u)?
        };
        let phi = self.phi.eval(&[u[self.i - 1]]).map_err(err)?;
        let l = if self.lambda_ii.is_zero() {
            0.0
        } else {
            self.lambda_ii.eval(u).map_err(err)?
        };
        Ok((h, phi - t * l * h))
    }

    pub fn eval(&self, t: f64, u: &[f64]) -> Result<f64, IntegrateError> {
        let (h, den) = self.denominator(t, u)?;
        let wrong_side = self.side.is_some_and(|s| den * s <= 0.0);
        if den == 0.0 || wrong_side {
            return Err(IntegrateError::Breakdown {
                i: self.i,
                t,
                u: u.to_vec(),
            });
        }
        Ok(h / den)
    }
}

fn check_b_zero(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    samples: &SampleSet,
    i: usize,
) -> Result<(), IntegrateError> {
    for k in (1..=sys.n).filter(|&k| k != i) {
        if let Some(b) = table.b(i, k) {
            if !b.is_numerically_zero(&samples.points, sys.tol) {
                return Err(IntegrateError::Prerequisite(format!(
                    "b_{i}{k} = {b} does not vanish"
                )));
            }
        }
    }
    Ok(())
}

fn component(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    samples: &SampleSet,
    i: usize,
    lame: LameField,
    phi: Expr,
) -> Result<BZeroComponent, IntegrateError> {
    check_b_zero(sys, table, samples, i)?;
    if phi.max_var() > 1 {
        return Err(IntegrateError::Prerequisite(format!(
            "φ_{i} = {phi} must be written in u1"
        )));
    }
    Ok(BZeroComponent {
        i,
        lame,
        phi,
        lambda_ii: table.dlambda(i, i).clone(),
        side: None,
    })
}

/// `P^i` frozen at one time `t`.
#[derive(Clone, Debug)]
pub struct BZeroP {
    pub component: BZeroComponent,
    pub t: f64,
}

impl BZeroP {
    pub fn eval(&self, u: &[f64]) -> Result<f64, IntegrateError> {
        self.component.eval(self.t, u)
    }
}

/// `P^i = H_i / (φ_i(u^i) − t λ^i_i H_i)` at fixed `t`. Requires `b_ik ≡ 0`
/// for `k ≠ i`; an undefined `b_ik` (from `a_ik ≡ 0`) imposes nothing.
pub fn p_for_b_zero(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    samples: &SampleSet,
    i: usize,
    lame: LameField,
    phi: Expr,
    t: f64,
) -> Result<BZeroP, IntegrateError> {
    let c = component(sys, table, samples, i, lame, phi)?;
    if c.phi.is_identically_zero() && (t == 0.0 || c.lambda_ii.is_identically_zero()) {
        return Err(IntegrateError::DenominatorIdenticallyZero { i });
    }
    Ok(BZeroP { component: c, t })
}

/// All components of the `b = 0` closed form, anchored at `(t0, u0)`: the
/// side of the breakdown locus containing the anchor is the valid one.
#[derive(Clone, Debug)]
pub struct BZeroSlope {
    pub components: Vec<BZeroComponent>,
}

impl BZeroSlope {
    pub fn new(
        sys: &DiagonalSystem,
        table: &CoeffTable,
        samples: &SampleSet,
        t0: f64,
        u0: &[f64],
        phis: &[Expr],
    ) -> Result<Self, IntegrateError> {
        if phis.len() != sys.n {
            return Err(IntegrateError::Prerequisite(format!(
                "expected {} φ functions, got {}",
                sys.n,
                phis.len()
            )));
        }
        let mut components = Vec::with_capacity(sys.n);
        for i in 1..=sys.n {
            let mut c = component(
                sys,
                table,
                samples,
                i,
                LameField::new(table, i, u0),
                phis[i - 1].clone(),
            )?;
            if c.phi.is_identically_zero() && c.lambda_ii.is_identically_zero() {
                return Err(IntegrateError::DenominatorIdenticallyZero { i });
            }
            let (_, den) = c.denominator(t0, u0)?;
            if den == 0.0 {
                return Err(IntegrateError::Breakdown {
                    i,
                    t: t0,
                    u: u0.to_vec(),
                });
            }
            c.side = Some(den.signum());
            components.push(c);
        }
        Ok(BZeroSlope { components })
    }
}

impl SlopeField for BZeroSlope {
    fn n(&self) -> usize {
        self.components.len()
    }

    fn slopes(&self, _x: f64, t: f64, u: &[f64], out: &mut [f64]) -> Result<(), String> {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(t, u).map_err(|e| e.to_string())?;
        }
        Ok(())
    }
}

/// `∂u/∂x = P`, `∂u/∂t = λ P` as a Pfaffian system over `(x, t)`.
struct Orbit<'a> {
    sys: &'a DiagonalSystem,
    slope: &'a dyn SlopeField,
}

impl Pfaffian for Orbit<'_> {
    fn dim(&self) -> usize {
        self.sys.n
    }

    fn rhs(&self, axis: usize, xt: &[f64], u: &[f64], out: &mut [f64]) -> Result<(), String> {
        self.slope.slopes(xt[0], xt[1], u, out)?;
        if axis == 1 {
            let lam = self.sys.speeds(u).map_err(|e| e.to_string())?;
            for (o, l) in out.iter_mut().zip(lam) {
                *o *= l;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitSolution {
    pub grid: SolutionGrid,
    pub verification: Verification,
    /// Worst difference between the x-first and t-first staircases.
    pub path_defect: f64,
    pub masked: usize,
    pub warning: Option<String>,
}

/// `u` over an `(x, t)` lattice whose base `(x0, t0)` carries `u0`.
pub fn integrate_orbit_solution(
    sys: &DiagonalSystem,
    slope: &dyn SlopeField,
    u0: &[f64],
    lattice: &Lattice,
    opts: &IntegrateOptions,
) -> Result<OrbitSolution, IntegrateError> {
    if slope.n() != sys.n || u0.len() != sys.n || lattice.dim() != 2 {
        return Err(IntegrateError::Prerequisite(format!(
            "need {} slopes, a {}-vector u0 and an (x, t) lattice",
            sys.n, sys.n
        )));
    }
    let orbit = Orbit { sys, slope };
    let (canon, rev) = rayon::join(
        || sweep(&orbit, lattice, u0, opts.substeps, &PathOrder::Canonical),
        || sweep(&orbit, lattice, u0, opts.substeps, &PathOrder::Reversed),
    );
    if canon.blowups > 0 {
        return Err(IntegrateError::BlowUp {
            count: canon.blowups,
        });
    }
    let defect = path_defect(&canon, &rev);
    let mut grid = SolutionGrid::empty(lattice.clone(), sys.n);
    for (f, v) in canon.values.iter().enumerate() {
        if let Some(u) = v {
            grid.u[f] = u.clone();
            grid.status[f] = PointStatus::Converged;
        }
    }
    let verification = verify_solution(sys, &grid);
    grid.attach(&verification);
    Ok(OrbitSolution {
        masked: canon.masked(),
        grid,
        verification,
        path_defect: defect,
        warning: defect_warning(defect, opts.tol),
    })
}
