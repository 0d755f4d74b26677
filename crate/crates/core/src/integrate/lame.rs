//! Lamé coefficients: `∂_k ln H_i = a_ik` for `k ≠ i`, with `H_i = 1` on the
//! `i`-th coordinate line through the base point.
//!
//! The equations say nothing about `∂_i H_i`, so `u^i` acts as a parameter.
//! A path from the base first moves along axis `i` (where `H_i` stays 1) and
//! then along the remaining axes in ascending order, accumulating
//! `∫ a_ik du^k` by adaptive Simpson quadrature on each leg.

use rayon::prelude::*;
use serde::Serialize;

use super::grid::{Lattice, ScalarFieldGrid};
use super::quad::adaptive_simpson;
use super::IntegrateError;
use crate::expr::Expr;
use crate::system::{check_semihamiltonian, CoeffTable, DiagonalSystem, SampleSet};

const QUAD_TOL: f64 = 1e-13;
/// Step of the centred differences in the `∂_k ln H_i = a_ik` check.
const FD_STEP: f64 = 1e-4;

/// `H_i` evaluated on demand at any point.
#[derive(Clone, Debug)]
pub struct LameField {
    pub i: usize,
    pub base: Vec<f64>,
    /// `(k, a_ik)` for every `k ≠ i` whose coefficient is not a literal zero.
    terms: Vec<(usize, Expr)>,
}

impl LameField {
    pub fn new(table: &CoeffTable, i: usize, base: &[f64]) -> Self {
        let terms = (1..=table.n)
            .filter(|&k| k != i && !table.a(i, k).is_zero())
            .map(|k| (k, table.a(i, k).clone()))
            .collect();
        LameField {
            i,
            base: base.to_vec(),
            terms,
        }
    }

    /// True when every `a_ik` is a literal zero, so `H_i ≡ 1`.
    pub fn is_trivial(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn ln_h(&self, u: &[f64]) -> Result<f64, IntegrateError> {
        let mut p = self.base.clone();
        p[self.i - 1] = u[self.i - 1];
        let mut acc = 0.0;
        for k in (1..=self.base.len()).filter(|&k| k != self.i) {
            if let Some((_, a)) = self.terms.iter().find(|(m, _)| *m == k) {
                acc += leg_integral(a, &p, k - 1, u[k - 1])?;
            }
            p[k - 1] = u[k - 1];
        }
        Ok(acc)
    }

    pub fn h(&self, u: &[f64]) -> Result<f64, IntegrateError> {
        Ok(self.ln_h(u)?.exp())
    }
}

/// `∫ a du^axis` from `p` to the point with `u^axis = end`.
fn leg_integral(a: &Expr, p: &[f64], axis: usize, end: f64) -> Result<f64, IntegrateError> {
    let f = |s: f64| {
        let mut q = p.to_vec();
        q[axis] = s;
        a.eval(&q).map_err(|e| e.to_string())
    };
    adaptive_simpson(&f, p[axis], end, QUAD_TOL).map_err(|reason| IntegrateError::Quadrature {
        point: p.to_vec(),
        reason,
    })
}

/// `H_i` on a lattice with its checks.
#[derive(Clone, Debug, Serialize)]
pub struct LameGrid {
    pub i: usize,
    pub base: Vec<f64>,
    pub h: ScalarFieldGrid,
    /// Worst loop integral of `Σ_k a_ik du^k` around lattice cells in the
    /// `(k, l)` planes, `k, l ≠ i`. Zero when `n = 2`: no such planes exist.
    pub loop_defect: f64,
    /// Worst `|∂_k ln H_i − a_ik| / (1 + |a_ik|)` by centred differences of
    /// the on-demand field at the lattice points.
    pub fd_residual: f64,
}

/// `H_i` at every lattice point, with the loop defect and the differential check.
pub fn lame_coefficients(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    samples: &SampleSet,
    i: usize,
    base: &[f64],
    lattice: &Lattice,
) -> Result<LameGrid, IntegrateError> {
    let sh = check_semihamiltonian(sys, table, samples);
    if !sh.holds {
        return Err(IntegrateError::Prerequisite(format!(
            "not semihamiltonian (residual {:e}); the Lamé equations are incompatible",
            sh.residual.max
        )));
    }
    let field = LameField::new(table, i, base);
    let values = (0..lattice.len())
        .into_par_iter()
        .map(|f| field.h(&lattice.point(&lattice.multi(f))))
        .collect::<Result<Vec<f64>, _>>()?;
    let loop_defect = loop_defect(table, i, lattice)?;
    let fd_residual = (0..lattice.len())
        .into_par_iter()
        .map(|f| fd_check(&field, table, &lattice.point(&lattice.multi(f))))
        .collect::<Result<Vec<f64>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(LameGrid {
        i,
        base: base.to_vec(),
        h: ScalarFieldGrid::new(lattice.clone(), values, loop_defect),
        loop_defect,
        fd_residual,
    })
}

fn fd_check(field: &LameField, table: &CoeffTable, u: &[f64]) -> Result<f64, IntegrateError> {
    let mut worst: f64 = 0.0;
    for k in (1..=table.n).filter(|&k| k != field.i) {
        let mut up = u.to_vec();
        let mut dn = u.to_vec();
        up[k - 1] += FD_STEP;
        dn[k - 1] -= FD_STEP;
        let d = (field.ln_h(&up)? - field.ln_h(&dn)?) / (2.0 * FD_STEP);
        let a = table
            .a(field.i, k)
            .eval(u)
            .map_err(|e| IntegrateError::Quadrature {
                point: u.to_vec(),
                reason: e.to_string(),
            })?;
        worst = worst.max((d - a).abs() / (1.0 + a.abs()));
    }
    Ok(worst)
}

fn loop_defect(table: &CoeffTable, i: usize, lattice: &Lattice) -> Result<f64, IntegrateError> {
    let n = table.n;
    let planes: Vec<(usize, usize)> = (1..=n)
        .filter(|&k| k != i)
        .flat_map(|k| (k + 1..=n).filter(move |&l| l != i).map(move |l| (k, l)))
        .collect();
    let mut worst: f64 = 0.0;
    for (k, l) in planes {
        let (ak, al) = (table.a(i, k), table.a(i, l));
        let cells: Vec<usize> = (0..lattice.len())
            .filter(|&f| {
                let idx = lattice.multi(f);
                idx[k - 1] + 1 < lattice.counts[k - 1] && idx[l - 1] + 1 < lattice.counts[l - 1]
            })
            .collect();
        let d = cells
            .into_par_iter()
            .map(|f| {
                let p0 = lattice.point(&lattice.multi(f));
                let (hk, hl) = (lattice.steps[k - 1], lattice.steps[l - 1]);
                let mut p1 = p0.clone();
                p1[k - 1] += hk;
                let mut p2 = p1.clone();
                p2[l - 1] += hl;
                let mut p3 = p0.clone();
                p3[l - 1] += hl;
                // counter-clockwise: p0 → p1 → p2 → p3 → p0
                let s = leg_integral(ak, &p0, k - 1, p1[k - 1])?
                    + leg_integral(al, &p1, l - 1, p2[l - 1])?
                    - leg_integral(ak, &p3, k - 1, p2[k - 1])?
                    - leg_integral(al, &p0, l - 1, p3[l - 1])?;
                Ok(s.abs())
            })
            .collect::<Result<Vec<f64>, IntegrateError>>()?;
        worst = d.into_iter().fold(worst, f64::max);
    }
    Ok(worst)
}
