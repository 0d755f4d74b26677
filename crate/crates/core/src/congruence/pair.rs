//! Density/flux pairs.

use serde::Serialize;

use super::CongruenceError;
use crate::expr::Expr;
use crate::integrate::{Lattice, ScalarFieldGrid};
use crate::system::{identity_residual, CoeffTable, DiagonalSystem, Residual, SampleSet};

#[derive(Clone, Debug)]
pub enum PairField {
    /// `g_i = ∂_i N` kept symbolically.
    Closed { n: Expr, m: Expr, g: Vec<Expr> },
    Grid {
        n: ScalarFieldGrid,
        m: ScalarFieldGrid,
        g: Vec<ScalarFieldGrid>,
    },
}

/// A conservation law `(N, M)` with the first derivatives of `N`.
#[derive(Clone, Debug)]
pub struct ConservationPair {
    pub field: PairField,
    /// Worst difference between the two marching orders (grid pairs).
    pub defect: f64,
    pub warning: Option<String>,
}

/// Residuals of the defining equations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairResiduals {
    /// `∂_i M − λ^i ∂_i N`.
    pub flux: f64,
    /// `N_ij − a_ij N_i − a_ji N_j`, `i ≠ j`.
    pub density: f64,
    pub witness: Option<Vec<f64>>,
}

fn ev(e: &Expr, u: &[f64]) -> Result<f64, CongruenceError> {
    e.eval(u)
        .map_err(|err| CongruenceError::Eval(format!("{e} at {u:?}: {err}")))
}

impl ConservationPair {
    /// A closed-form pair, accepted after both defining equations hold at
    /// the samples to `sys.tol`.
    pub fn closed(
        sys: &DiagonalSystem,
        table: &CoeffTable,
        samples: &SampleSet,
        n: Expr,
        m: Expr,
    ) -> Result<Self, CongruenceError> {
        let g: Vec<Expr> = (1..=sys.n).map(|i| n.derivative(i).simplify()).collect();
        let pair = ConservationPair {
            field: PairField::Closed { n, m, g },
            defect: 0.0,
            warning: None,
        };
        let (flux, density) = pair
            .closed_residuals(sys, table, samples)
            .expect("closed pair");
        for (what, r) in [("flux", flux), ("density", density)] {
            if !r.within(sys.tol) {
                return Err(CongruenceError::NotConservationLaw {
                    what: what.into(),
                    residual: r.max,
                    witness: r.witness,
                });
            }
        }
        Ok(pair)
    }

    pub fn is_closed(&self) -> bool {
        matches!(self.field, PairField::Closed { .. })
    }

    /// Symbolic residuals of a closed pair at the samples.
    pub fn closed_residuals(
        &self,
        sys: &DiagonalSystem,
        table: &CoeffTable,
        samples: &SampleSet,
    ) -> Option<(Residual, Residual)> {
        let PairField::Closed { m, g, .. } = &self.field else {
            return None;
        };
        let mut flux = Residual::zero();
        let mut density = Residual::zero();
        for i in 1..=sys.n {
            let mi = m.derivative(i);
            flux.absorb(identity_residual(
                &[mi, -(sys.lambda(i) * &g[i - 1])],
                &samples.points,
            ));
            for j in (1..=sys.n).filter(|&j| j != i) {
                let terms = [
                    g[i - 1].derivative(j),
                    -(table.a(i, j) * &g[i - 1]),
                    -(table.a(j, i) * &g[j - 1]),
                ];
                density.absorb(identity_residual(&terms, &samples.points));
            }
        }
        Some((flux, density))
    }

    /// The lattice of a grid pair.
    pub fn lattice(&self) -> Option<&Lattice> {
        match &self.field {
            PairField::Grid { n, .. } => Some(&n.lattice),
            PairField::Closed { .. } => None,
        }
    }

    /// `(N, M, g)` at every point of `lattice`, flat order. A grid pair only
    /// accepts its own lattice.
    pub fn on_lattice(
        &self,
        lattice: &Lattice,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>), CongruenceError> {
        match &self.field {
            PairField::Closed { n, m, g } => {
                let mut nv = Vec::with_capacity(lattice.len());
                let mut mv = Vec::with_capacity(lattice.len());
                let mut gv = Vec::with_capacity(lattice.len());
                for f in 0..lattice.len() {
                    let u = lattice.point(&lattice.multi(f));
                    nv.push(ev(n, &u)?);
                    mv.push(ev(m, &u)?);
                    gv.push(g.iter().map(|e| ev(e, &u)).collect::<Result<Vec<_>, _>>()?);
                }
                Ok((nv, mv, gv))
            }
            PairField::Grid { n, m, g } => {
                if &n.lattice != lattice {
                    return Err(CongruenceError::Prerequisite(
                        "grid pair sampled on a different lattice".into(),
                    ));
                }
                let gv = (0..lattice.len())
                    .map(|f| g.iter().map(|gi| gi.values[f]).collect())
                    .collect();
                Ok((n.values.clone(), m.values.clone(), gv))
            }
        }
    }

    /// Finite-difference residuals of a grid pair at interior points, each
    /// scaled by `1 + |terms|`.
    pub fn fd_residuals(&self, sys: &DiagonalSystem, table: &CoeffTable) -> Option<PairResiduals> {
        let PairField::Grid { n, m, g } = &self.field else {
            return None;
        };
        let l = &n.lattice;
        let mut out = PairResiduals {
            flux: 0.0,
            density: 0.0,
            witness: None,
        };
        let mut worst = 0.0;
        for f in 0..l.len() {
            let idx = l.multi(f);
            let u = l.point(&idx);
            let Ok(lam) = sys.speeds(&u) else { continue };
            for i in 0..sys.n {
                if let (Some(dm), Some(dn)) = (
                    crate::integrate::fd4(m, &idx, i),
                    crate::integrate::fd4(n, &idx, i),
                ) {
                    let r = (dm - lam[i] * dn).abs() / (1.0 + dm.abs() + (lam[i] * dn).abs());
                    out.flux = out.flux.max(r);
                    if r > worst {
                        worst = r;
                        out.witness = Some(u.clone());
                    }
                }
                for j in (0..sys.n).filter(|&j| j != i) {
                    let Some(d) = crate::integrate::fd4(&g[i], &idx, j) else {
                        continue;
                    };
                    let (Ok(aij), Ok(aji)) = (
                        table.a(i + 1, j + 1).eval(&u),
                        table.a(j + 1, i + 1).eval(&u),
                    ) else {
                        continue;
                    };
                    let (s1, s2) = (aij * g[i].values[f], aji * g[j].values[f]);
                    let r = (d - s1 - s2).abs() / (1.0 + d.abs() + s1.abs() + s2.abs());
                    out.density = out.density.max(r);
                    if r > worst {
                        worst = r;
                        out.witness = Some(u.clone());
                    }
                }
            }
        }
        Some(out)
    }
}
