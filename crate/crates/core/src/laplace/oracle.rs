//! Brute-force involutivity check for an extra order-1 invariant.
//!
//! Works on coordinates `(u^1..u^n, p, x, t)` with `p = u^i_x`; the
//! directions `∂_{u^k_x}`, `k ≠ i`, commute with everything here and are
//! left out. The fields are
//!
//! ```text
//! barξ = ∂_t − λ^i ∂_x + λ^i_i p² ∂_p
//! η_k  = ∂_k + a_ik p ∂_p                    k ≠ i
//! ζ    = [η_j, barξ] / λ^i_j
//! ```
//!
//! `ζ` is taken as the commutator itself rather than its closed form, so the
//! oracle never touches `b_ij`. Every pairwise bracket is projected onto the
//! span of the fields by least squares at sample points.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::expr::Expr;
use crate::system::{check_darboux_order0, CoeffTable, DiagonalSystem, SampleSet};

const FIXED_P: [f64; 3] = [-1.0, 0.5, 2.0];
const RANDOM_P: usize = 2;
/// Sample points of `u` used by the oracle; brackets are costly to evaluate.
const U_POINTS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleVerdict {
    Involutive,
    NotInvolutive,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub i: usize,
    pub verdict: OracleVerdict,
    /// Worst scaled projection residual over brackets and points.
    pub defect: f64,
    pub witness: Option<Vec<f64>>,
    /// Names of the bracket attaining the defect.
    pub worst_bracket: Option<(String, String)>,
}

impl OracleReport {
    pub fn involutive(&self) -> bool {
        self.verdict == OracleVerdict::Involutive
    }
}

type Field = Vec<Expr>;

fn apply(x: &Field, f: &Expr) -> Expr {
    let mut acc = Expr::zero();
    for (a, c) in x.iter().enumerate() {
        if !c.is_zero() {
            let d = f.derivative(a + 1);
            if !d.is_zero() {
                acc = acc + c.clone() * d;
            }
        }
    }
    acc.simplify()
}

fn bracket(x: &Field, y: &Field) -> Field {
    x.iter()
        .zip(y)
        .map(|(xc, yc)| (apply(x, yc) - apply(y, xc)).simplify())
        .collect()
}

/// Involutivity of the order-1 distribution at index `i`.
pub fn order1_oracle(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    samples: &SampleSet,
    i: usize,
) -> OracleReport {
    let n = sys.n;
    let o0 = check_darboux_order0(sys, table, samples, i);
    if o0.holds {
        return OracleReport {
            i,
            verdict: OracleVerdict::NotApplicable,
            defect: 0.0,
            witness: None,
            worst_bracket: None,
        };
    }
    let dim = n + 3;
    let (pv, xv, tv) = (n + 1, n + 2, n + 3);
    let p = Expr::var(pv);
    let zero_field = || vec![Expr::zero(); dim];

    let mut xi = zero_field();
    xi[tv - 1] = Expr::one();
    xi[xv - 1] = (-sys.lambda(i).clone()).simplify();
    xi[pv - 1] = (table.dlambda(i, i) * &p.clone().powi(2)).simplify();

    let mut fields: Vec<(String, Field)> = vec![("xi".into(), xi.clone())];
    let mut etas = Vec::new();
    for k in (1..=n).filter(|&k| k != i) {
        let mut eta = zero_field();
        eta[k - 1] = Expr::one();
        eta[pv - 1] = (table.a(i, k) * &p).simplify();
        etas.push((k, eta.clone()));
        fields.push((format!("eta{k}"), eta));
    }
    let j = o0.active[0];
    let eta_j = &etas.iter().find(|(k, _)| *k == j).expect("active index").1;
    let zeta: Field = bracket(eta_j, &xi)
        .into_iter()
        .map(|c| (c / table.dlambda(i, j).clone()).simplify())
        .collect();
    fields.push(("zeta".into(), zeta));

    let mut brackets = Vec::new();
    for a in 0..fields.len() {
        for b in a + 1..fields.len() {
            brackets.push((
                fields[a].0.clone(),
                fields[b].0.clone(),
                bracket(&fields[a].1, &fields[b].1),
            ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(sys.seed ^ 0x6f72_6163_6c65);
    let stride = (samples.points.len() / U_POINTS).max(1);
    let mut report = OracleReport {
        i,
        verdict: OracleVerdict::Involutive,
        defect: 0.0,
        witness: None,
        worst_bracket: None,
    };
    for u in samples.points.iter().step_by(stride) {
        let mut ps: Vec<f64> = FIXED_P.to_vec();
        ps.extend((0..RANDOM_P).map(|_| rng.gen_range(-3.0..3.0)));
        for &pval in &ps {
            let mut point = u.clone();
            point.extend([pval, 0.0, 0.0]);
            let eval_field = |f: &Field| -> Option<DVector<f64>> {
                f.iter()
                    .map(|c| c.eval(&point).ok())
                    .collect::<Option<Vec<f64>>>()
                    .map(DVector::from_vec)
            };
            let cols: Option<Vec<DVector<f64>>> =
                fields.iter().map(|(_, f)| eval_field(f)).collect();
            let Some(cols) = cols else {
                report.defect = f64::INFINITY;
                report.witness = Some(point.clone());
                continue;
            };
            let m = DMatrix::from_columns(&cols);
            let svd = m.clone().svd(true, true);
            for (na, nb, br) in &brackets {
                let Some(c) = eval_field(br) else {
                    report.defect = f64::INFINITY;
                    report.witness = Some(point.clone());
                    continue;
                };
                let coef = svd.solve(&c, 1e-12).expect("svd with u and v");
                let r = (&m * coef - &c).amax();
                let scale = 1.0 + c.amax() + m.amax();
                let defect = r / scale;
                if defect > report.defect {
                    report.defect = defect;
                    report.witness = Some(point.clone());
                    report.worst_bracket = Some((na.clone(), nb.clone()));
                }
            }
        }
    }
    if !(report.defect <= sys.tol) {
        report.verdict = OracleVerdict::NotInvolutive;
    }
    report
}
