//! Laplace transformations of the commuting-flow system for an index pair.
//!
//! For a pair `(i, j)` with denominator `D = a_ji − ∂_i a_ij / a_ij` the
//! speeds transform as
//!
//! ```text
//! barλ^j = λ^i
//! barλ^i = λ^i_i / D + λ^i
//! barλ^k = (a_ij λ^k − a_kj λ^i) / (a_ij − a_kj)      k ≠ i, j
//! ```
//!
//! and row `i` of the new coefficient table is available directly,
//! `bar a_im = a_im + ∂_m D / D`, with a second product form for `m ≠ j`.
//! [`laplace_transform`] computes all of it and records how well the forms
//! agree with each other and with the table rebuilt from `barλ`.

mod battery;
mod oracle;
mod sequence;

use serde::Serialize;
use thiserror::Error;

use crate::expr::Expr;
use crate::system::{
    check_semihamiltonian, identity_residual, Check, CoeffTable, DiagonalSystem, Residual,
    SampleSet, SystemError,
};

pub use battery::{battery, hypotheses, BatteryInstance, Verdicts};
pub use oracle::{order1_oracle, OracleReport, OracleVerdict};
pub use sequence::{sequence_terminates, Outcome, SequenceNode, SequenceResult};

#[derive(Debug, Error, Clone, PartialEq, Serialize)]
pub enum LaplaceError {
    #[error("prerequisite violated for ({i},{j}): {reason}")]
    PrereqViolated { i: usize, j: usize, reason: String },
    #[error("degenerate Laplace transformation for ({i},{j}): denominator vanishes{}", at_point(.witness))]
    DegenerateLaplace {
        i: usize,
        j: usize,
        witness: Option<Vec<f64>>,
    },
    #[error("coefficients a_{i}{j} and a_{k}{j} collide at {witness:?}")]
    CollidingCoefficients {
        i: usize,
        j: usize,
        k: usize,
        witness: Vec<f64>,
    },
    #[error("{0}")]
    System(String),
}

fn at_point(w: &Option<Vec<f64>>) -> String {
    match w {
        Some(p) => format!(" at {p:?}"),
        None => " identically".into(),
    }
}

impl From<SystemError> for LaplaceError {
    fn from(e: SystemError) -> Self {
        LaplaceError::System(e.to_string())
    }
}

/// Row `i` of the transformed table in both closed forms.
#[derive(Clone, Debug)]
pub struct TransformedRow {
    pub i: usize,
    pub j: usize,
    pub denominator: Expr,
    /// `bar a_im` by the first form, indexed by `m − 1`; `None` at `m = i`.
    pub row: Vec<Option<Expr>>,
    /// First form against the product form, over `m ≠ i, j`.
    pub cross_form: Residual,
}

impl TransformedRow {
    /// Every `bar a_im` vanishes, syntactically or at every sample.
    pub fn vanishes(&self, samples: &SampleSet, tol: f64) -> bool {
        self.row
            .iter()
            .flatten()
            .all(|e| e.is_zero() || e.is_numerically_zero(&samples.points, tol))
    }

    pub fn vanishes_symbolically(&self) -> bool {
        self.row.iter().flatten().all(Expr::is_zero)
    }
}

/// One Laplace step with its consistency residuals.
#[derive(Clone, Debug)]
pub struct LaplaceStep {
    pub i: usize,
    pub j: usize,
    pub denominator: Expr,
    pub lambdas: Vec<Expr>,
    pub system: DiagonalSystem,
    /// Table of the transformed system; absent when it is not strictly hyperbolic.
    pub table: Option<CoeffTable>,
    pub hyperbolicity: Option<String>,
    pub row: TransformedRow,
    /// First-form row against the table rebuilt from `barλ`.
    pub table_residual: Option<Residual>,
    pub semihamiltonian: Option<Check>,
}

fn first_pass_checks(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    samples: &SampleSet,
    i: usize,
    j: usize,
) -> Result<Expr, LaplaceError> {
    if table.is_numeric_zero(i, j) {
        return Err(LaplaceError::PrereqViolated {
            i,
            j,
            reason: format!("a_{i}{j} vanishes"),
        });
    }
    let aij = table.a(i, j);
    let d = (table.a(j, i) - &(aij.derivative(i) / aij.clone())).simplify();
    if d.is_zero() {
        return Err(LaplaceError::DegenerateLaplace {
            i,
            j,
            witness: None,
        });
    }
    for p in &samples.points {
        match d.eval(p) {
            Ok(v) if v.abs() >= sys.tol => {}
            _ => {
                return Err(LaplaceError::DegenerateLaplace {
                    i,
                    j,
                    witness: Some(p.clone()),
                })
            }
        }
    }
    Ok(d)
}

/// Row `i` of the `(i, j)` transformed table, first form with the product
/// form as a cross-check.
pub fn transformed_a(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    samples: &SampleSet,
    i: usize,
    j: usize,
) -> Result<TransformedRow, LaplaceError> {
    let d = first_pass_checks(sys, table, samples, i, j)?;
    let n = sys.n;
    let mut row = vec![None; n];
    let mut cross = Residual::zero();
    for m in (1..=n).filter(|&m| m != i) {
        let first = (table.a(i, m) + &(d.derivative(m) / d.clone())).simplify();
        if m != j {
            let aim = table.a(i, m);
            let product = if table.is_zero(i, m) {
                Expr::zero()
            } else {
                let inner = table.a(m, i) - &(aim.derivative(i) / aim.clone());
                aim.clone()
                    * (Expr::one() - table.a(m, j) / table.a(i, j))
                    * (Expr::one() - inner / d.clone())
            };
            cross.absorb(identity_residual(
                &[first.clone(), -product],
                &samples.points,
            ));
        }
        row[m - 1] = Some(first);
    }
    Ok(TransformedRow {
        i,
        j,
        denominator: d,
        row,
        cross_form: cross,
    })
}

/// The `(i, j)` Laplace transformation applied to the speeds.
pub fn laplace_transform(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    samples: &SampleSet,
    i: usize,
    j: usize,
) -> Result<LaplaceStep, LaplaceError> {
    let row = transformed_a(sys, table, samples, i, j)?;
    let n = sys.n;
    let d = row.denominator.clone();
    let li = sys.lambda(i);
    let aij = table.a(i, j);
    let mut lambdas = Vec::with_capacity(n);
    for k in 1..=n {
        let e = if k == j {
            li.clone()
        } else if k == i {
            table.dlambda(i, i) / &d + li.clone()
        } else {
            let akj = table.a(k, j);
            let gap = aij - akj;
            for p in &samples.points {
                match gap.eval(p) {
                    Ok(v) if v.abs() >= sys.tol => {}
                    _ => {
                        return Err(LaplaceError::CollidingCoefficients {
                            i,
                            j,
                            k,
                            witness: p.clone(),
                        })
                    }
                }
            }
            (aij * sys.lambda(k) - akj * li) / gap
        };
        lambdas.push(e.simplify());
    }
    let system = sys.with_lambdas(lambdas.clone());
    let (table_new, hyperbolicity) = match system.sample() {
        Ok(s) => (Some((CoeffTable::build(&system, &s), s)), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut table_residual = None;
    let mut semihamiltonian = None;
    if let Some((t, s)) = &table_new {
        let mut r = Residual::zero();
        for m in (1..=n).filter(|&m| m != i) {
            let first = row.row[m - 1].as_ref().expect("row entry");
            r.absorb(identity_residual(
                &[first.clone(), -t.a(i, m).clone()],
                &samples.points,
            ));
        }
        table_residual = Some(r);
        semihamiltonian = Some(check_semihamiltonian(&system, t, s));
    }
    Ok(LaplaceStep {
        i,
        j,
        denominator: d,
        lambdas,
        system,
        table: table_new.map(|(t, _)| t),
        hyperbolicity,
        row,
        table_residual,
        semihamiltonian,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::builtin;

    fn prep(name: &str) -> (DiagonalSystem, CoeffTable, SampleSet) {
        let sys = builtin(name).unwrap();
        let s = sys.sample().unwrap();
        let t = CoeffTable::build(&sys, &s);
        (sys, t, s)
    }

    #[test]
    fn shifted_family_maps_to_shifted_family() {
        let (sys, t, s) = prep("shifted3");
        let step = laplace_transform(&sys, &t, &s, 1, 2).unwrap();
        let at0: Vec<f64> = step
            .lambdas
            .iter()
            .map(|l| l.eval(&[0.0; 3]).unwrap())
            .collect();
        // hand evaluation: barλ^1 = λ^1 + (c_1 − c_2), barλ^2 = λ^1, barλ^3 = (λ^3 + λ^1)/2
        for (v, c) in at0.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((v - c).abs() <= 1e-12, "{at0:?}");
        }
        for p in &s.points {
            let sum: f64 = p.iter().sum();
            for (k, c) in [-1.0, 0.0, 1.0].iter().enumerate() {
                assert!((step.lambdas[k].eval(p).unwrap() - (sum + c)).abs() < 1e-12);
            }
        }
        assert_eq!(step.lambdas[1], sys.lambda(1).simplify());
        assert!(step.table_residual.as_ref().unwrap().max <= 1e-7);
        assert!(step.row.cross_form.max <= 1e-7);
        assert!(step.semihamiltonian.as_ref().unwrap().holds);
    }

    #[test]
    fn transformed_row_by_product_form() {
        let (sys, t, s) = prep("shifted3");
        let row = transformed_a(&sys, &t, &s, 1, 2).unwrap();
        // (1/2)(1 − (−1)/1)(1 − (−1/2)/(−1)) = 1/2, and 1/(c̄_3 − c̄_1) = 1/2
        let v = row.row[2].as_ref().unwrap().eval(&[0.1, 0.2, 0.3]).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        let step = laplace_transform(&sys, &t, &s, 1, 3).unwrap();
        let at0: Vec<f64> = step
            .lambdas
            .iter()
            .map(|l| l.eval(&[0.0; 3]).unwrap())
            .collect();
        for (v, c) in at0.iter().zip([-2.0, -1.0, 0.0]) {
            assert!((v - c).abs() <= 1e-12, "{at0:?}");
        }
    }

    #[test]
    fn vanishing_b_is_degenerate() {
        for name in ["lindeg2", "ratio2"] {
            let (sys, t, s) = prep(name);
            assert!(matches!(
                laplace_transform(&sys, &t, &s, 1, 2),
                Err(LaplaceError::DegenerateLaplace { i: 1, j: 2, .. })
            ));
            assert!(matches!(
                transformed_a(&sys, &t, &s, 1, 2),
                Err(LaplaceError::DegenerateLaplace { .. })
            ));
        }
    }

    #[test]
    fn vanishing_a_violates_prerequisites() {
        let (sys, t, s) = prep("order0_decoupled");
        for (i, j) in [(1, 2), (2, 1)] {
            assert!(matches!(
                laplace_transform(&sys, &t, &s, i, j),
                Err(LaplaceError::PrereqViolated { .. })
            ));
        }
    }

    #[test]
    fn transformed_speed_at_the_pair_index_is_structural() {
        let (sys, t, s) = prep("shifted3");
        for i in 1..=3 {
            for j in (1..=3).filter(|&j| j != i) {
                let step = laplace_transform(&sys, &t, &s, i, j).unwrap();
                assert_eq!(step.lambdas[j - 1], sys.lambda(i).simplify());
            }
        }
    }
}
