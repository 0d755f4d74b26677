//! Integrability diagnostics evaluated at sample points.

use serde::Serialize;

use super::{identity_residual, CoeffTable, DiagonalSystem, Residual, SampleSet, SystemError};
use crate::expr::Expr;

/// A verdict with the residual that justified it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub holds: bool,
    pub residual: Residual,
}

impl Check {
    fn from_residual(residual: Residual, tol: f64) -> Self {
        Check {
            holds: residual.within(tol),
            residual,
        }
    }
}

/// Semihamiltonian condition `∂_j a_ik = ∂_k a_ij` over ordered distinct triples.
/// Vacuous for `n = 2`.
pub fn check_semihamiltonian(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    samples: &SampleSet,
) -> Check {
    let mut r = Residual::zero();
    for i in 1..=sys.n {
        r.absorb(semihamiltonian_for(table, i, samples));
    }
    Check::from_residual(r, sys.tol)
}

fn semihamiltonian_for(table: &CoeffTable, i: usize, samples: &SampleSet) -> Residual {
    let n = table.n;
    let mut r = Residual::zero();
    for j in (1..=n).filter(|&j| j != i) {
        for k in (1..=n).filter(|&k| k != i && k != j) {
            let lhs = table.a(i, k).derivative(j);
            let rhs = table.a(i, j).derivative(k);
            r.absorb(identity_residual(&[lhs, -rhs], &samples.points));
        }
    }
    r
}

/// Residual of `∂_j a_ki = a_ki a_ij + a_kj a_ji − a_ki a_kj` over distinct triples.
pub fn check_commuting_compatibility(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    samples: &SampleSet,
) -> Check {
    let n = table.n;
    let mut r = Residual::zero();
    for k in 1..=n {
        for i in (1..=n).filter(|&i| i != k) {
            for j in (1..=n).filter(|&j| j != i && j != k) {
                let (aki, aij, akj, aji) =
                    (table.a(k, i), table.a(i, j), table.a(k, j), table.a(j, i));
                let terms = [aki.derivative(j), -(aki * aij), -(akj * aji), aki * akj];
                r.absorb(identity_residual(&terms, &samples.points));
            }
        }
    }
    Check::from_residual(r, sys.tol)
}

/// Order-0 verdict for one index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Order0 {
    pub i: usize,
    pub holds: bool,
    /// Holds only numerically: some `∂_k λ^i` is not a literal zero.
    pub numeric_only: bool,
    /// Indices `k` with `∂_k λ^i ≠ 0`.
    pub active: Vec<usize>,
}

fn lambda_derivative_vanishes(
    table: &CoeffTable,
    i: usize,
    k: usize,
    samples: &SampleSet,
    tol: f64,
) -> (bool, bool) {
    let d = table.dlambda(i, k);
    if d.is_zero() {
        (true, true)
    } else {
        (d.is_numerically_zero(&samples.points, tol), false)
    }
}

/// Extra invariant of order 0 at `i`: `∂_k λ^i = 0` for every `k ≠ i`.
pub fn check_darboux_order0(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    samples: &SampleSet,
    i: usize,
) -> Order0 {
    let mut active = Vec::new();
    let mut symbolic = true;
    for k in (1..=sys.n).filter(|&k| k != i) {
        let (zero, literal) = lambda_derivative_vanishes(table, i, k, samples, sys.tol);
        if !zero {
            active.push(k);
        }
        symbolic &= literal;
    }
    let holds = active.is_empty();
    Order0 {
        i,
        holds,
        numeric_only: holds && !symbolic,
        active,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Order1Verdict {
    Holds,
    Fails,
    NotApplicable,
}

/// Order-1 verdict for one index with the residual of each condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Order1 {
    pub i: usize,
    pub verdict: Order1Verdict,
    pub witness_j: Option<usize>,
    /// Indices with `∂_k λ^i = 0`, left out of the conditions.
    pub skipped: Vec<usize>,
    pub semihamiltonian: Residual,
    /// `∂_k b_ik + a_ik b_ik` over active `k`.
    pub b_closure: Residual,
    /// `b_ik − b_ij` over active `k`.
    pub b_equal: Residual,
}

impl Order1 {
    pub fn holds(&self) -> bool {
        self.verdict == Order1Verdict::Holds
    }
}

/// Extra invariant of order 1 at `i`.
///
/// Conditions: the semihamiltonian triples through `i`; for a witness `j`
/// with `∂_j λ^i ≠ 0`, `∂_j b_ij + a_ij b_ij = 0`; for every other active
/// `k`, `b_ik = b_ij` and `∂_k b_ik + a_ik b_ik = 0`. The witness is the
/// first active index, which loses nothing since every active index has to
/// satisfy the same conditions.
pub fn check_darboux_order1(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    samples: &SampleSet,
    i: usize,
) -> Order1 {
    let o0 = check_darboux_order0(sys, table, samples, i);
    let skipped: Vec<usize> = (1..=sys.n)
        .filter(|&k| k != i && !o0.active.contains(&k))
        .collect();
    if o0.holds {
        return Order1 {
            i,
            verdict: Order1Verdict::NotApplicable,
            witness_j: None,
            skipped,
            semihamiltonian: Residual::zero(),
            b_closure: Residual::zero(),
            b_equal: Residual::zero(),
        };
    }
    let j = o0.active[0];
    let semi = semihamiltonian_for(table, i, samples);
    let mut closure = Residual::zero();
    let mut equal = Residual::zero();
    let inf = Residual {
        max: f64::INFINITY,
        witness: None,
        symbolic: false,
    };
    match table.b(i, j) {
        None => {
            closure = inf.clone();
            equal = inf;
        }
        Some(bij) => {
            for &k in &o0.active {
                match table.b(i, k) {
                    None => closure.absorb(inf.clone()),
                    Some(bik) => {
                        let terms: [Expr; 2] = [bik.derivative(k), table.a(i, k) * bik];
                        closure.absorb(identity_residual(&terms, &samples.points));
                        if k != j {
                            equal.absorb(identity_residual(
                                &[bik.clone(), -bij.clone()],
                                &samples.points,
                            ));
                        }
                    }
                }
            }
        }
    }
    let ok = semi.within(sys.tol) && closure.within(sys.tol) && equal.within(sys.tol);
    Order1 {
        i,
        verdict: if ok {
            Order1Verdict::Holds
        } else {
            Order1Verdict::Fails
        },
        witness_j: Some(j),
        skipped,
        semihamiltonian: semi,
        b_closure: closure,
        b_equal: equal,
    }
}

/// Per-index `∂_i λ^i` is a literal zero.
pub fn check_linear_degeneracy(sys: &DiagonalSystem) -> Vec<bool> {
    (1..=sys.n)
        .map(|i| sys.lambda(i).derivative(i).is_zero())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hyperbolicity {
    pub holds: bool,
    pub worst_gap: f64,
    pub witness: Vec<f64>,
    pub attempted: usize,
    pub rejected: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub n: usize,
    pub lambdas: Vec<String>,
    pub strictly_hyperbolic: Hyperbolicity,
    pub coefficient_identity: Residual,
    pub semihamiltonian: Check,
    pub commuting_compatibility: Check,
    pub linearly_degenerate: Vec<bool>,
    pub darboux_order0: Vec<Order0>,
    pub darboux_order1: Vec<Order1>,
    pub overall_darboux_order_le1: bool,
}

/// All diagnostics at once.
pub fn full_report(sys: &DiagonalSystem) -> Result<DiagnosticsReport, SystemError> {
    let samples = sys.sample()?;
    let table = CoeffTable::build(sys, &samples);
    let order0: Vec<Order0> = (1..=sys.n)
        .map(|i| check_darboux_order0(sys, &table, &samples, i))
        .collect();
    let order1: Vec<Order1> = (1..=sys.n)
        .map(|i| check_darboux_order1(sys, &table, &samples, i))
        .collect();
    let overall = order0
        .iter()
        .zip(&order1)
        .all(|(a, b)| a.holds || b.holds());
    Ok(DiagnosticsReport {
        n: sys.n,
        lambdas: sys.printed_lambdas(),
        strictly_hyperbolic: Hyperbolicity {
            holds: true,
            worst_gap: samples.worst_gap,
            witness: samples.worst_gap_point.clone(),
            attempted: samples.attempted,
            rejected: samples.rejected,
        },
        coefficient_identity: table.defining_identity(sys, &samples),
        semihamiltonian: check_semihamiltonian(sys, &table, &samples),
        commuting_compatibility: check_commuting_compatibility(sys, &table, &samples),
        linearly_degenerate: check_linear_degeneracy(sys),
        darboux_order0: order0,
        darboux_order1: order1,
        overall_darboux_order_le1: overall,
    })
}
