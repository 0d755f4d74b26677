//! Laplace transformation of pairs and the speeds read back off them.
//!
//! `N̄ = N − ∂_j N / a_ij`, `M̄ = M − λ^i ∂_j N / a_ij`. Whatever pairs went
//! in, `∂_k M̄ / ∂_k N̄` must be the `k`-th transformed speed:
//! `λ^i` for `k = j`, `λ^i + λ^i_i / D` with `D = a_ji − ∂_i a_ij / a_ij`
//! for `k = i`, and `(a_ij λ^k − a_kj λ^i)/(a_ij − a_kj)` otherwise.

use serde::Serialize;

use super::pair::{ConservationPair, PairField};
use super::CongruenceError;
use crate::expr::Expr;
use crate::integrate::{fd4, ScalarFieldGrid};
use crate::laplace::laplace_transform;
use crate::system::{CoeffTable, DiagonalSystem, SampleSet};

/// `∂_k N̄` below `SMALL (1 + |∂_k M̄|)` gives no speed.
const SMALL: f64 = 1e-8;

fn check_indices(n: usize, i: usize, j: usize) -> Result<(), CongruenceError> {
    if i == j || !(1..=n).contains(&i) || !(1..=n).contains(&j) {
        Err(CongruenceError::Prerequisite(format!(
            "need distinct indices in 1..={n}, got ({i}, {j})"
        )))
    } else {
        Ok(())
    }
}

/// The `(i, j)` transformation of every pair.
pub fn laplace_transform_congruence(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    pairs: &[ConservationPair],
    i: usize,
    j: usize,
) -> Result<Vec<ConservationPair>, CongruenceError> {
    check_indices(sys.n, i, j)?;
    if table.is_numeric_zero(i, j) {
        return Err(CongruenceError::PrereqViolated { i, j });
    }
    let aij = table.a(i, j);
    let li = sys.lambda(i);
    pairs
        .iter()
        .map(|p| match &p.field {
            PairField::Closed { n, m, g } => {
                let shift = (&g[j - 1] / aij).simplify();
                let nb = (n - &shift).simplify();
                let mb = (m - &(li * &shift)).simplify();
                let gb = (1..=sys.n).map(|k| nb.derivative(k).simplify()).collect();
                Ok(ConservationPair {
                    field: PairField::Closed {
                        n: nb,
                        m: mb,
                        g: gb,
                    },
                    defect: p.defect,
                    warning: p.warning.clone(),
                })
            }
            PairField::Grid { n, m, g } => {
                let l = &n.lattice;
                let mut nb = Vec::with_capacity(l.len());
                let mut mb = Vec::with_capacity(l.len());
                for f in 0..l.len() {
                    let u = l.point(&l.multi(f));
                    let (a, lam) = match (aij.eval(&u), li.eval(&u)) {
                        (Ok(a), Ok(lam)) if a != 0.0 => (a, lam),
                        _ => {
                            nb.push(f64::NAN);
                            mb.push(f64::NAN);
                            continue;
                        }
                    };
                    let shift = g[j - 1].values[f] / a;
                    nb.push(n.values[f] - shift);
                    mb.push(m.values[f] - lam * shift);
                }
                let nb = ScalarFieldGrid::new(l.clone(), nb, p.defect);
                let gb = (0..sys.n)
                    .map(|k| {
                        let v = (0..l.len())
                            .map(|f| fd4(&nb, &l.multi(f), k).unwrap_or(f64::NAN))
                            .collect();
                        ScalarFieldGrid::new(l.clone(), v, p.defect)
                    })
                    .collect();
                let mb = ScalarFieldGrid::new(l.clone(), mb, p.defect);
                Ok(ConservationPair {
                    field: PairField::Grid {
                        n: nb,
                        m: mb,
                        g: gb,
                    },
                    defect: p.defect,
                    warning: p.warning.clone(),
                })
            }
        })
        .collect()
}

/// The transformed speeds, or why a direction is degenerate.
pub fn expected_speeds(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    samples: &SampleSet,
    i: usize,
    j: usize,
) -> Vec<Result<Expr, String>> {
    let aij = table.a(i, j);
    let li = sys.lambda(i);
    let vanishes = |e: &Expr| {
        e.is_zero()
            || samples
                .points
                .iter()
                .any(|p| e.eval(p).map_or(true, |v| v.abs() < sys.tol))
    };
    (1..=sys.n)
        .map(|k| {
            if k == j {
                Ok(li.clone())
            } else if k == i {
                let d = (table.a(j, i) - &(aij.derivative(i) / aij.clone())).simplify();
                if vanishes(&d) {
                    Err(format!(
                        "D = a_{j}{i} − ∂_{i} a_{i}{j}/a_{i}{j} = −b_{i}{j} vanishes"
                    ))
                } else {
                    Ok((li.clone() + table.dlambda(i, i) / &d).simplify())
                }
            } else {
                let akj = table.a(k, j);
                let gap = (aij - akj).simplify();
                if vanishes(&gap) {
                    Err(format!("a_{i}{j} − a_{k}{j} vanishes"))
                } else {
                    Ok(((aij * sys.lambda(k) - akj * li) / gap).simplify())
                }
            }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct RelationReport {
    pub k: usize,
    pub expected: Option<String>,
    pub degenerate: Option<String>,
    /// Worst `|∂_k M̄ − v_k ∂_k N̄| / (1 + |∂_k M̄| + |v_k ∂_k N̄|)`.
    pub residual: Option<f64>,
    pub checked: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub i: usize,
    pub j: usize,
    pub relations: Vec<RelationReport>,
    /// Worst `|extracted − barλ^k| / (1 + |barλ^k|)` against the Laplace
    /// module, when it accepts the pair.
    pub laplace_match: Option<f64>,
    pub laplace_error: Option<String>,
    /// Worst spread of the extracted speeds across the pairs.
    pub pair_spread: f64,
    /// Evaluation points: the samples for closed pairs, interior lattice
    /// points for grid pairs.
    #[serde(skip)]
    pub points: Vec<Vec<f64>>,
    /// Speeds from the first pair, `[point][k − 1]`.
    #[serde(skip)]
    pub extracted: Vec<Vec<Option<f64>>>,
}

/// `(∂_k N̄, ∂_k M̄)` of one transformed pair at each point.
fn derivatives(
    p: &ConservationPair,
    n: usize,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<(f64, f64)>>), CongruenceError> {
    match &p.field {
        PairField::Closed { .. } => unreachable!("closed pairs take the sample path"),
        PairField::Grid { n: nb, m: mb, .. } => {
            let l = &nb.lattice;
            let mut pts = Vec::new();
            let mut ds = Vec::new();
            for f in 0..l.len() {
                let idx = l.multi(f);
                let row: Option<Vec<(f64, f64)>> = (0..n)
                    .map(|k| Some((fd4(nb, &idx, k)?, fd4(mb, &idx, k)?)))
                    .collect();
                if let Some(row) = row {
                    pts.push(l.point(&idx));
                    ds.push(row);
                }
            }
            Ok((pts, ds))
        }
    }
}

fn closed_derivatives(
    p: &ConservationPair,
    n: usize,
    points: &[Vec<f64>],
) -> Result<Vec<Vec<(f64, f64)>>, CongruenceError> {
    let PairField::Closed { m: mb, g, .. } = &p.field else {
        unreachable!()
    };
    let dm: Vec<Expr> = (1..=n).map(|k| mb.derivative(k).simplify()).collect();
    points
        .iter()
        .map(|u| {
            (0..n)
                .map(|k| {
                    let a = g[k].eval(u).map_err(|e| {
                        CongruenceError::Eval(format!("∂_{} N̄ at {u:?}: {e}", k + 1))
                    })?;
                    let b = dm[k].eval(u).map_err(|e| {
                        CongruenceError::Eval(format!("∂_{} M̄ at {u:?}: {e}", k + 1))
                    })?;
                    Ok((a, b))
                })
                .collect()
        })
        .collect()
}

/// Transform the pairs, read the speeds off them and compare with the
/// expected speeds and with the Laplace module.
pub fn verify_speed_invariance(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    samples: &SampleSet,
    pairs: &[ConservationPair],
    i: usize,
    j: usize,
) -> Result<InvarianceReport, CongruenceError> {
    let n = sys.n;
    if pairs.is_empty() {
        return Err(CongruenceError::Prerequisite("no pairs".into()));
    }
    let transformed = laplace_transform_congruence(sys, table, pairs, i, j)?;
    let expected = expected_speeds(sys, table, samples, i, j);
    let (laplace, laplace_error) = match laplace_transform(sys, table, samples, i, j) {
        Ok(step) => (Some(step.lambdas), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let (points, per_pair) = if transformed.iter().all(ConservationPair::is_closed) {
        let pts = samples.points.clone();
        let ds = transformed
            .iter()
            .map(|p| closed_derivatives(p, n, &pts))
            .collect::<Result<Vec<_>, _>>()?;
        (pts, ds)
    } else {
        let mut pts = None;
        let mut ds = Vec::new();
        for p in &transformed {
            if p.is_closed() {
                return Err(CongruenceError::Prerequisite(
                    "cannot mix closed and grid pairs".into(),
                ));
            }
            let (q, d) = derivatives(p, n)?;
            if pts.as_ref().is_some_and(|old: &Vec<Vec<f64>>| old != &q) {
                return Err(CongruenceError::Prerequisite(
                    "grid pairs on different lattices".into(),
                ));
            }
            pts = Some(q);
            ds.push(d);
        }
        (pts.unwrap_or_default(), ds)
    };
    let speed = |dn: f64, dm: f64| (dn.abs() > SMALL * (1.0 + dm.abs())).then(|| dm / dn);
    let mut relations: Vec<RelationReport> = expected
        .iter()
        .enumerate()
        .map(|(k, e)| RelationReport {
            k: k + 1,
            expected: e.as_ref().ok().map(|x| x.to_string()),
            degenerate: e.as_ref().err().cloned(),
            residual: None,
            checked: 0,
        })
        .collect();
    let mut laplace_match: Option<f64> = None;
    let mut pair_spread: f64 = 0.0;
    let mut extracted = Vec::with_capacity(points.len());
    for (pi, u) in points.iter().enumerate() {
        let mut row = Vec::with_capacity(n);
        for k in 0..n {
            let speeds: Vec<Option<f64>> = per_pair
                .iter()
                .map(|d| speed(d[pi][k].0, d[pi][k].1))
                .collect();
            let valid: Vec<f64> = speeds.iter().flatten().copied().collect();
            if let (Some(lo), Some(hi)) = (
                valid.iter().copied().reduce(f64::min),
                valid.iter().copied().reduce(f64::max),
            ) {
                pair_spread = pair_spread.max((hi - lo) / (1.0 + lo.abs()));
            }
            if let Ok(e) = &expected[k] {
                if let Ok(v) = e.eval(u) {
                    let rel = &mut relations[k];
                    for d in &per_pair {
                        let (dn, dm) = d[pi][k];
                        let r = (dm - v * dn).abs() / (1.0 + dm.abs() + (v * dn).abs());
                        rel.residual = Some(rel.residual.map_or(r, |w: f64| w.max(r)));
                        rel.checked += 1;
                    }
                }
            }
            if let (Some(bar), Some(s)) = (&laplace, speeds[0]) {
                if let Ok(b) = bar[k].eval(u) {
                    let r = (s - b).abs() / (1.0 + b.abs());
                    laplace_match = Some(laplace_match.map_or(r, |w| w.max(r)));
                }
            }
            row.push(speeds[0]);
        }
        extracted.push(row);
    }
    Ok(InvarianceReport {
        i,
        j,
        relations,
        laplace_match,
        laplace_error,
        pair_spread,
        points,
        extracted,
    })
}

/// Worst pointwise `|a − b| / (1 + |a|)` between the speeds of two reports
/// taken at the same points.
pub fn speed_spread(a: &InvarianceReport, b: &InvarianceReport) -> Option<f64> {
    if a.points != b.points {
        return None;
    }
    let mut worst: f64 = 0.0;
    for (ra, rb) in a.extracted.iter().zip(&b.extracted) {
        for (x, y) in ra.iter().zip(rb) {
            if let (Some(x), Some(y)) = (x, y) {
                worst = worst.max((x - y).abs() / (1.0 + x.abs()));
            }
        }
    }
    Some(worst)
}
