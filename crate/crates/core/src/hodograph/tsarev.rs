//! Newton continuation for `F_i(u) = μ^i(u) − λ^i(u) t − x = 0` over an
//! `(x, t)` lattice.
//!
//! The first line leaves the seeded corner along one axis; every other
//! line starts from its point on that first line and runs along the other
//! axis. Lines after the first are independent and solved in parallel.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::grid::{PointStatus, SolutionGrid};
use crate::expr::Expr;
use crate::integrate::{Lattice, PfaffianSpec, ScalarFieldGrid};
use crate::system::DiagonalSystem;

/// A commuting flow `μ(u)` with its Jacobian.
pub trait CommutingFlow: Sync {
    fn n(&self) -> usize;
    fn eval(&self, u: &[f64]) -> Result<Vec<f64>, String>;

    /// `J[i][k] = ∂_k μ^i`. Centred differences unless overridden.
    fn jacobian(&self, u: &[f64]) -> Result<Vec<Vec<f64>>, String> {
        let n = self.n();
        let mut jac = vec![vec![0.0; n]; n];
        for k in 0..n {
            let h = 1e-6 * (1.0 + u[k].abs());
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            up[k] += h;
            dn[k] -= h;
            let (fp, fm) = (self.eval(&up)?, self.eval(&dn)?);
            for i in 0..n {
                jac[i][k] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }
}

/// Closed-form `μ` with its exact symbolic Jacobian.
#[derive(Clone, Debug)]
pub struct ExprFlow {
    pub mu: Vec<Expr>,
    jac: Vec<Vec<Expr>>,
}

impl ExprFlow {
    pub fn new(mu: Vec<Expr>) -> Self {
        let n = mu.len();
        let jac = mu
            .iter()
            .map(|m| (1..=n).map(|k| m.derivative(k).simplify()).collect())
            .collect();
        ExprFlow { mu, jac }
    }
}

impl CommutingFlow for ExprFlow {
    fn n(&self) -> usize {
        self.mu.len()
    }

    fn eval(&self, u: &[f64]) -> Result<Vec<f64>, String> {
        self.mu
            .iter()
            .map(|m| m.eval(u).map_err(|e| e.to_string()))
            .collect()
    }

    fn jacobian(&self, u: &[f64]) -> Result<Vec<Vec<f64>>, String> {
        self.jac
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| e.eval(u).map_err(|e| e.to_string()))
                    .collect()
            })
            .collect()
    }
}

/// `μ` integrated from its base value along a staircase at every call.
#[derive(Clone, Debug)]
pub struct StaircaseFlow {
    pub spec: PfaffianSpec,
    pub base: Vec<f64>,
    pub mu0: Vec<f64>,
    pub steps_per_leg: usize,
}

impl CommutingFlow for StaircaseFlow {
    fn n(&self) -> usize {
        self.spec.n
    }

    fn eval(&self, u: &[f64]) -> Result<Vec<f64>, String> {
        self.spec
            .evaluate(&self.base, &self.mu0, u, self.steps_per_leg)
    }
}

/// `μ` multilinearly interpolated from lattice grids; the Jacobian uses
/// centred differences of the interpolant at the cell scale.
#[derive(Clone, Debug)]
pub struct GridFlow {
    pub grids: Vec<ScalarFieldGrid>,
}

impl CommutingFlow for GridFlow {
    fn n(&self) -> usize {
        self.grids.len()
    }

    fn eval(&self, u: &[f64]) -> Result<Vec<f64>, String> {
        self.grids
            .iter()
            .map(|g| {
                g.interpolate(u)
                    .ok_or_else(|| format!("{u:?} outside the μ lattice or in a masked cell"))
            })
            .collect()
    }

    fn jacobian(&self, u: &[f64]) -> Result<Vec<Vec<f64>>, String> {
        let n = self.n();
        let steps = &self.grids[0].lattice.steps;
        let mut jac = vec![vec![0.0; n]; n];
        for k in 0..n {
            let h = steps[k].abs() / 2.0;
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            up[k] += h;
            dn[k] -= h;
            let (fp, fm) = (self.eval(&up)?, self.eval(&dn)?);
            for i in 0..n {
                jac[i][k] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }
}

/// Which axis the first continuation line follows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOrder {
    /// First line along `t`, then lines along `x`.
    #[default]
    RowMajor,
    /// First line along `x`, then lines along `t`.
    ColumnMajor,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub sweep: SweepOrder,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-12,
            max_iter: 25,
            sweep: SweepOrder::RowMajor,
        }
    }
}

/// Condition numbers above this count as singular.
const MAX_COND: f64 = 1e12;
const MAX_HALVINGS: usize = 30;

struct Newton<'a> {
    flow: &'a dyn CommutingFlow,
    sys: &'a DiagonalSystem,
    dlambda: Vec<Vec<Expr>>,
    opts: NewtonOptions,
}

struct Outcome {
    u: Vec<f64>,
    status: PointStatus,
    iterations: usize,
}

impl Newton<'_> {
    fn residual(&self, u: &[f64], x: f64, t: f64) -> Result<Vec<f64>, String> {
        let mu = self.flow.eval(u)?;
        let lam = self.sys.speeds(u).map_err(|e| e.to_string())?;
        let f: Vec<f64> = mu.iter().zip(&lam).map(|(m, l)| m - l * t - x).collect();
        if f.iter().all(|v| v.is_finite()) {
            Ok(f)
        } else {
            Err("non-finite residual".into())
        }
    }

    fn jacobian(&self, u: &[f64], t: f64) -> Result<DMatrix<f64>, String> {
        let jm = self.flow.jacobian(u)?;
        let n = jm.len();
        let mut j = DMatrix::zeros(n, n);
        for i in 0..n {
            for k in 0..n {
                let dl = if self.dlambda[i][k].is_zero() {
                    0.0
                } else {
                    self.dlambda[i][k].eval(u).map_err(|e| e.to_string())?
                };
                j[(i, k)] = jm[i][k] - t * dl;
            }
        }
        Ok(j)
    }

    fn solve(&self, start: &[f64], x: f64, t: f64) -> Outcome {
        let norm = |f: &[f64]| f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut u = start.to_vec();
        let fail = |u: Vec<f64>, status, iterations| Outcome {
            u,
            status,
            iterations,
        };
        let Ok(mut f) = self.residual(&u, x, t) else {
            return fail(u, PointStatus::NoConvergence, 0);
        };
        for it in 0..=self.opts.max_iter {
            if norm(&f) <= self.opts.tol {
                return Outcome {
                    u,
                    status: PointStatus::Converged,
                    iterations: it,
                };
            }
            if it == self.opts.max_iter {
                break;
            }
            let Ok(j) = self.jacobian(&u, t) else {
                return fail(u, PointStatus::NoConvergence, it);
            };
            let sv = j.clone().singular_values();
            let (smax, smin) = (sv.max(), sv.min());
            if !(smin > 0.0 && smax / smin < MAX_COND) {
                return fail(u, PointStatus::SingularJacobian, it);
            }
            let Some(delta) = j.lu().solve(&-DVector::from_column_slice(&f)) else {
                return fail(u, PointStatus::SingularJacobian, it);
            };
            let f0 = norm(&f);
            let mut scale = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let trial: Vec<f64> = u
                    .iter()
                    .zip(delta.iter())
                    .map(|(a, d)| a + scale * d)
                    .collect();
                if let Ok(ft) = self.residual(&trial, x, t) {
                    if norm(&ft) <= f0 || norm(&ft) <= self.opts.tol {
                        accepted = Some((trial, ft));
                        break;
                    }
                }
                scale *= 0.5;
            }
            let Some((nu, nf)) = accepted else {
                return fail(u, PointStatus::NoConvergence, it + 1);
            };
            u = nu;
            f = nf;
        }
        Outcome {
            u,
            status: PointStatus::NoConvergence,
            iterations: self.opts.max_iter,
        }
    }

    /// Solve along `points` in order, warm-starting each from the last
    /// converged value (or `start`).
    fn line(
        &self,
        grid: &SolutionGrid,
        points: &[(usize, usize)],
        start: &[f64],
    ) -> Vec<(usize, Outcome)> {
        let mut warm = start.to_vec();
        points
            .iter()
            .map(|&(ix, it)| {
                let o = self.solve(&warm, grid.x(ix), grid.t(it));
                if o.status == PointStatus::Converged {
                    warm = o.u.clone();
                }
                (grid.flat(ix, it), o)
            })
            .collect()
    }
}

/// Solve the implicit relations over `lattice` (axes `(x, t)`), with `seed`
/// as the starting guess at the base corner.
pub fn solve_tsarev(
    sys: &DiagonalSystem,
    flow: &dyn CommutingFlow,
    lattice: &Lattice,
    seed: &[f64],
    opts: &NewtonOptions,
) -> SolutionGrid {
    let n = sys.n;
    assert_eq!(flow.n(), n, "flow and system dimensions differ");
    assert_eq!(seed.len(), n, "seed dimension");
    let dlambda = (1..=n)
        .map(|i| {
            (1..=n)
                .map(|k| sys.lambda(i).derivative(k).simplify())
                .collect()
        })
        .collect();
    let newton = Newton {
        flow,
        sys,
        dlambda,
        opts: *opts,
    };
    let mut grid = SolutionGrid::empty(lattice.clone(), n);
    let (nx, nt) = (grid.nx(), grid.nt());
    let first: Vec<(usize, usize)> = match opts.sweep {
        SweepOrder::RowMajor => (0..nt).map(|it| (0, it)).collect(),
        SweepOrder::ColumnMajor => (0..nx).map(|ix| (ix, 0)).collect(),
    };
    let mut results = newton.line(&grid, &first, seed);
    let heads: Vec<Vec<f64>> = {
        // each later line starts from the nearest converged point on the first
        let mut last = seed.to_vec();
        results
            .iter()
            .map(|(_, o)| {
                if o.status == PointStatus::Converged {
                    last = o.u.clone();
                }
                last.clone()
            })
            .collect()
    };
    let rest: Vec<Vec<(usize, Outcome)>> = first
        .par_iter()
        .zip(heads.par_iter())
        .map(|(&(ix, it), head)| {
            let pts: Vec<(usize, usize)> = match opts.sweep {
                SweepOrder::RowMajor => (1..nx).map(|jx| (jx, it)).collect(),
                SweepOrder::ColumnMajor => (1..nt).map(|jt| (ix, jt)).collect(),
            };
            newton.line(&grid, &pts, head)
        })
        .collect();
    results.extend(rest.into_iter().flatten());
    for (f, o) in results {
        grid.u[f] = o.u;
        grid.status[f] = o.status;
        grid.iterations[f] = o.iterations;
    }
    grid
}
