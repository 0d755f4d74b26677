//! Commuting flows from the closed Pfaffian system
//!
//! ```text
//! dμ^i = b_i (μ^i − φ_i(u^i)) du^i + Σ_{k≠i} a_ik (μ^k − μ^i) du^k
//! ```
//!
//! where `b_i = b_{i j_i}` for the witness index `j_i` of the order-1 check.
//! An index with an order-0 invariant has every `a_ik = 0`; its component
//! is driven by `dμ^i = φ_i(u^i) du^i` instead, which leaves `μ^i` a free
//! function of `u^i` as the commuting equations allow.

use rayon::prelude::*;
use serde::Serialize;

use super::grid::{Lattice, ScalarFieldGrid};
use super::staircase::{integrate_to, path_defect, sweep, PathOrder, Pfaffian};
use super::{defect_warning, fd4, IntegrateError, IntegrateOptions};
use crate::expr::Expr;
use crate::system::{
    check_darboux_order0, check_darboux_order1, CoeffTable, DiagonalSystem, SampleSet,
};

/// The `du^i` term of component `i`.
#[derive(Clone, Debug, PartialEq)]
pub enum IndexTerm {
    /// `b (μ^i − φ(u^i))`.
    Relaxation { b: Expr, phi: Expr },
    /// `φ(u^i)`.
    Source { phi: Expr },
}

/// Coefficients of the Pfaffian system. `φ` is a one-variable expression
/// written in `u1`, evaluated at `u^i`.
#[derive(Clone, Debug)]
pub struct PfaffianSpec {
    pub n: usize,
    /// `a[i-1][k-1] = a_ik`; the diagonal is ignored.
    pub a: Vec<Vec<Expr>>,
    pub terms: Vec<IndexTerm>,
    /// The pair index `j_i` used for `b_i`, if any.
    pub pairs: Vec<Option<usize>>,
}

fn check_phi(phi: &Expr, i: usize) -> Result<(), IntegrateError> {
    if phi.max_var() > 1 {
        Err(IntegrateError::Prerequisite(format!(
            "φ_{i} = {phi} must be a function of one variable written in u1"
        )))
    } else {
        Ok(())
    }
}

impl PfaffianSpec {
    /// Coefficients supplied directly.
    pub fn direct(a: Vec<Vec<Expr>>, terms: Vec<IndexTerm>) -> Result<Self, IntegrateError> {
        let n = terms.len();
        if a.len() != n || a.iter().any(|r| r.len() != n) {
            return Err(IntegrateError::Prerequisite(format!(
                "coefficient matrix must be {n}×{n}"
            )));
        }
        for (i, t) in terms.iter().enumerate() {
            let (IndexTerm::Relaxation { phi, .. } | IndexTerm::Source { phi }) = t;
            check_phi(phi, i + 1)?;
        }
        Ok(PfaffianSpec {
            n,
            a,
            terms,
            pairs: vec![None; n],
        })
    }

    /// Coefficients from a system's table, with `j_i` from the order-1 check.
    pub fn from_system(
        sys: &DiagonalSystem,
        table: &CoeffTable,
        samples: &SampleSet,
        phis: &[Expr],
    ) -> Result<Self, IntegrateError> {
        let n = sys.n;
        if phis.len() != n {
            return Err(IntegrateError::Prerequisite(format!(
                "expected {n} φ functions, got {}",
                phis.len()
            )));
        }
        let a = (1..=n)
            .map(|i| {
                (1..=n)
                    .map(|k| {
                        if k == i {
                            Expr::zero()
                        } else {
                            table.a(i, k).clone()
                        }
                    })
                    .collect()
            })
            .collect();
        let mut terms = Vec::with_capacity(n);
        let mut pairs = Vec::with_capacity(n);
        for i in 1..=n {
            let phi = phis[i - 1].clone();
            check_phi(&phi, i)?;
            if check_darboux_order0(sys, table, samples, i).holds {
                terms.push(IndexTerm::Source { phi });
                pairs.push(None);
                continue;
            }
            let o1 = check_darboux_order1(sys, table, samples, i);
            let j = o1.witness_j.ok_or_else(|| {
                IntegrateError::Prerequisite(format!("no active index for i = {i}"))
            })?;
            let b = table
                .b(i, j)
                .ok_or_else(|| {
                    IntegrateError::Prerequisite(format!("b_{i}{j} undefined: a_{i}{j} ≡ 0"))
                })?
                .clone();
            terms.push(IndexTerm::Relaxation { b, phi });
            pairs.push(Some(j));
        }
        Ok(PfaffianSpec { n, a, terms, pairs })
    }

    /// `μ(u)` by integrating from `base` along full legs, a fixed number of
    /// RK4 steps per leg so the value is smooth in `u`.
    pub fn evaluate(
        &self,
        base: &[f64],
        mu0: &[f64],
        u: &[f64],
        steps_per_leg: usize,
    ) -> Result<Vec<f64>, String> {
        integrate_to(self, base, mu0, u, &PathOrder::Canonical, steps_per_leg)
    }
}

fn ev(e: &Expr, p: &[f64]) -> Result<f64, String> {
    e.eval(p).map_err(|e| e.to_string())
}

impl Pfaffian for PfaffianSpec {
    fn dim(&self) -> usize {
        self.n
    }

    fn rhs(&self, axis: usize, u: &[f64], y: &[f64], out: &mut [f64]) -> Result<(), String> {
        for i in 0..self.n {
            out[i] = if i == axis {
                match &self.terms[i] {
                    IndexTerm::Relaxation { b, phi } => {
                        let bv = if b.is_zero() { 0.0 } else { ev(b, u)? };
                        if bv == 0.0 {
                            0.0
                        } else {
                            bv * (y[i] - ev(phi, &[u[i]])?)
                        }
                    }
                    IndexTerm::Source { phi } => ev(phi, &[u[i]])?,
                }
            } else if self.a[i][axis].is_zero() {
                0.0
            } else {
                ev(&self.a[i][axis], u)? * (y[axis] - y[i])
            };
        }
        Ok(())
    }
}

/// Commuting flow on a lattice with its consistency measures.
#[derive(Clone, Debug, Serialize)]
pub struct MuField {
    pub grids: Vec<ScalarFieldGrid>,
    /// Worst difference between the canonical and reversed staircases.
    pub path_defect: f64,
    /// Worst `|∂_k μ^i − a_ik (μ^k − μ^i)| / (1 + |a_ik (μ^k − μ^i)|)` by
    /// fourth-order differences; `None` when no axis has five points.
    pub commuting_residual: Option<f64>,
    pub masked: usize,
    pub warning: Option<String>,
}

/// `μ` on `lattice` from `μ_0` at its base.
pub fn integrate_frobenius_mu(
    spec: &PfaffianSpec,
    mu0: &[f64],
    lattice: &Lattice,
    opts: &IntegrateOptions,
) -> Result<MuField, IntegrateError> {
    if mu0.len() != spec.n || lattice.dim() != spec.n {
        return Err(IntegrateError::Prerequisite(format!(
            "μ_0 and the lattice must have dimension {}",
            spec.n
        )));
    }
    let (canon, rev) = rayon::join(
        || sweep(spec, lattice, mu0, opts.substeps, &PathOrder::Canonical),
        || sweep(spec, lattice, mu0, opts.substeps, &PathOrder::Reversed),
    );
    if canon.blowups > 0 {
        return Err(IntegrateError::BlowUp {
            count: canon.blowups,
        });
    }
    let defect = path_defect(&canon, &rev);
    let grids: Vec<ScalarFieldGrid> = (0..spec.n)
        .map(|c| ScalarFieldGrid::new(lattice.clone(), canon.component(c), defect))
        .collect();
    let commuting_residual = commuting_residual(spec, &grids);
    Ok(MuField {
        grids,
        path_defect: defect,
        commuting_residual,
        masked: canon.masked(),
        warning: defect_warning(defect, opts.tol),
    })
}

fn commuting_residual(spec: &PfaffianSpec, grids: &[ScalarFieldGrid]) -> Option<f64> {
    let l = &grids[0].lattice;
    if l.counts.iter().all(|&c| c < 5) {
        return None;
    }
    let worst = (0..l.len())
        .into_par_iter()
        .map(|f| {
            let idx = l.multi(f);
            let u = l.point(&idx);
            let mut w: f64 = 0.0;
            for i in 0..spec.n {
                for k in (0..spec.n).filter(|&k| k != i) {
                    let Some(d) = fd4(&grids[i], &idx, k) else {
                        continue;
                    };
                    let a = if spec.a[i][k].is_zero() {
                        0.0
                    } else {
                        spec.a[i][k].eval(&u).unwrap_or(f64::NAN)
                    };
                    let rhs = a * (grids[k].get(&idx) - grids[i].get(&idx));
                    let r = (d - rhs).abs() / (1.0 + rhs.abs());
                    w = if r.is_nan() { f64::INFINITY } else { w.max(r) };
                }
            }
            w
        })
        .reduce(|| 0.0, f64::max);
    Some(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::system::builtin;

    fn zeros(n: usize) -> Vec<Vec<Expr>> {
        vec![vec![Expr::zero(); n]; n]
    }

    #[test]
    fn decoupled_relaxation_is_exponential() {
        let spec = PfaffianSpec::direct(
            zeros(2),
            vec![
                IndexTerm::Relaxation {
                    b: Expr::one(),
                    phi: Expr::zero()
                };
                2
            ],
        )
        .unwrap();
        let l = Lattice::new(vec![0.5, 1.0], vec![0.1, 0.1], vec![8, 8]);
        let mu =
            integrate_frobenius_mu(&spec, &[1.0, 1.0], &l, &IntegrateOptions::default()).unwrap();
        for f in 0..l.len() {
            let u = l.point(&l.multi(f));
            // RK4 at 16 substeps per 0.1 leaves ~2e-11 after 0.7 units
            assert!((mu.grids[0].values[f] - (u[0] - 0.5).exp()).abs() < 1e-10);
            assert!((mu.grids[1].values[f] - (u[1] - 1.0).exp()).abs() < 1e-10);
        }
        assert!(mu.path_defect < 1e-14);
    }

    #[test]
    fn zero_coefficients_keep_the_initial_value() {
        let spec = PfaffianSpec::direct(
            zeros(3),
            vec![
                IndexTerm::Relaxation {
                    b: Expr::zero(),
                    phi: Expr::var(1)
                };
                3
            ],
        )
        .unwrap();
        let l = Lattice::new(vec![0.0; 3], vec![0.2; 3], vec![4; 3]);
        let mu = integrate_frobenius_mu(&spec, &[1.5, -2.0, 3.0], &l, &IntegrateOptions::default())
            .unwrap();
        for (c, v) in [1.5, -2.0, 3.0].iter().enumerate() {
            assert!(mu.grids[c].values.iter().all(|x| x == v));
        }
        assert_eq!(mu.path_defect, 0.0);
    }

    #[test]
    fn ratio_system_with_vanishing_b() {
        // λ = (u2/u1, 0): dμ^1 = a_12 (μ^2 − μ^1) du^2, dμ^2 = 0
        let sys = builtin("ratio2").unwrap();
        let s = sys.sample().unwrap();
        let t = CoeffTable::build(&sys, &s);
        let spec = PfaffianSpec::from_system(&sys, &t, &s, &[Expr::var(1), Expr::zero()]).unwrap();
        assert_eq!(spec.pairs, vec![Some(2), None]);
        let l = Lattice::spanning(&sys.domain, 20);
        let mu =
            integrate_frobenius_mu(&spec, &[0.3, 2.0], &l, &IntegrateOptions::default()).unwrap();
        assert!(mu.path_defect <= 1e-8, "{}", mu.path_defect);
        assert!(
            mu.commuting_residual.unwrap() <= 1e-6,
            "{:?}",
            mu.commuting_residual
        );
        assert!(mu.grids[1].values.iter().all(|&v| v == 2.0));
        assert!(mu.warning.is_none());
    }

    #[test]
    fn relaxation_route_is_closed_for_order1_system() {
        // λ = (1/(u1 + u2), 0): b_12 = −1/(u1 + u2) satisfies the order-1 criterion
        let sys = DiagonalSystem::from_strs(&["1/(u1 + u2)", "0"], vec![(1.0, 2.0); 2]).unwrap();
        let s = sys.sample().unwrap();
        let t = CoeffTable::build(&sys, &s);
        let phis = [parse("u1^2", 1).unwrap(), parse("sin(u1)", 1).unwrap()];
        let spec = PfaffianSpec::from_system(&sys, &t, &s, &phis).unwrap();
        let l = Lattice::spanning(&sys.domain, 20);
        let mu =
            integrate_frobenius_mu(&spec, &[1.0, 0.5], &l, &IntegrateOptions::default()).unwrap();
        assert!(mu.path_defect <= 1e-8, "{}", mu.path_defect);
        assert!(
            mu.commuting_residual.unwrap() <= 1e-6,
            "{:?}",
            mu.commuting_residual
        );
    }

    #[test]
    fn shifted_family_is_flagged_non_integrable() {
        let sys = builtin("shifted3").unwrap();
        let s = sys.sample().unwrap();
        let t = CoeffTable::build(&sys, &s);
        let spec =
            PfaffianSpec::from_system(&sys, &t, &s, &[Expr::var(1), Expr::var(1), Expr::var(1)])
                .unwrap();
        let l = Lattice::spanning(&sys.domain, 6);
        let mu = integrate_frobenius_mu(&spec, &[0.1, 0.2, 0.4], &l, &IntegrateOptions::default())
            .unwrap();
        assert!(mu.warning.is_some(), "{}", mu.path_defect);
    }

    #[test]
    fn error_shrinks_at_fourth_order() {
        // closed order-1 example: both staircases agree to rounding, so the
        // order shows in the error against a finely substepped reference
        let sys = DiagonalSystem::from_strs(&["1/(u1 + u2)", "0"], vec![(1.0, 2.0); 2]).unwrap();
        let s = sys.sample().unwrap();
        let t = CoeffTable::build(&sys, &s);
        let phis = [parse("sin(3*u1)", 1).unwrap(), parse("exp(u1)", 1).unwrap()];
        let spec = PfaffianSpec::from_system(&sys, &t, &s, &phis).unwrap();
        let l = Lattice::spanning(&sys.domain, 3);
        let run = |k| {
            integrate_frobenius_mu(
                &spec,
                &[1.0, 0.5],
                &l,
                &IntegrateOptions {
                    substeps: k,
                    tol: 1e-9,
                },
            )
            .unwrap()
        };
        let reference = run(256);
        let err = |k| {
            let m = run(k);
            assert!(m.path_defect <= 1e-12, "{}", m.path_defect);
            (0..2)
                .flat_map(|c| (0..l.len()).map(move |f| (c, f)))
                .map(|(c, f)| (m.grids[c].values[f] - reference.grids[c].values[f]).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(1), err(2));
        assert!(e1 > 1e-12 && e1 / e2 >= 8.0, "{e1} {e2}");
    }
}
