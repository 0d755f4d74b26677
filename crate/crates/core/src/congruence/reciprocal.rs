//! Reciprocal transformations `dX = B dx + A dt`, `dT = N dx + M dt`.
//!
//! Both one-forms are closed on solutions when `(B, A)` and `(N, M)` are
//! conservation laws; in the new variables `u^i_T = V^i u^i_X` with
//! `V^i = (B λ^i − A)/(M − N λ^i)`.

use serde::Serialize;

use super::CongruenceError;
use crate::expr::Expr;
use crate::system::{identity_residual, DiagonalSystem, Residual, SampleSet};

#[derive(Clone, Debug)]
pub struct Reciprocal {
    pub system: DiagonalSystem,
    pub residuals: ReciprocalResiduals,
}

/// Conservation-law residuals of the two input pairs.
#[derive(Clone, Debug, Serialize)]
pub struct ReciprocalResiduals {
    pub x_pair: Residual,
    pub t_pair: Residual,
}

fn flux_residual(
    sys: &DiagonalSystem,
    density: &Expr,
    flux: &Expr,
    samples: &SampleSet,
) -> Residual {
    let mut r = Residual::zero();
    for i in 1..=sys.n {
        let terms = [
            flux.derivative(i),
            -(sys.lambda(i) * &density.derivative(i)),
        ];
        r.absorb(identity_residual(&terms, &samples.points));
    }
    r
}

/// The speeds after the change of variables built from `(B, A)` and `(N, M)`.
pub fn reciprocal_speeds(
    sys: &DiagonalSystem,
    samples: &SampleSet,
    b: &Expr,
    a: &Expr,
    n: &Expr,
    m: &Expr,
) -> Result<Reciprocal, CongruenceError> {
    let x_pair = flux_residual(sys, b, a, samples);
    let t_pair = flux_residual(sys, n, m, samples);
    for (what, r) in [("(B, A)", &x_pair), ("(N, M)", &t_pair)] {
        if !r.within(sys.tol) {
            return Err(CongruenceError::NotConservationLaw {
                what: what.into(),
                residual: r.max,
                witness: r.witness.clone(),
            });
        }
    }
    let mut speeds = Vec::with_capacity(sys.n);
    for i in 1..=sys.n {
        let li = sys.lambda(i);
        let den = (m - &(n * li)).simplify();
        let small = |p: &Vec<f64>| den.eval(p).map_or(true, |v| v.abs() < sys.tol);
        if den.is_zero() || samples.points.iter().any(small) {
            let witness = samples
                .points
                .iter()
                .find(|p| small(p))
                .cloned()
                .unwrap_or_else(|| sys.centre());
            return Err(CongruenceError::DenominatorVanishes {
                what: format!("M − N λ^{i}"),
                witness,
            });
        }
        speeds.push(((b * li - a.clone()) / den).simplify());
    }
    Ok(Reciprocal {
        system: sys.with_lambdas(speeds),
        residuals: ReciprocalResiduals { x_pair, t_pair },
    })
}
