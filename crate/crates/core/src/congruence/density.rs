//! The density equation `N_ij = a_ij N_i + a_ji N_j` as a Goursat problem.
//!
//! With `g_i = N_i` the system prescribes `∂_j g_i = a_ij g_i + a_ji g_j`
//! for `j ≠ i` but says nothing about `∂_i g_i`; the axis data fill that
//! gap on the `i`-th coordinate line through the base. Marching the lattice
//! in flat order, each `g_i` at a new point comes from one lower neighbour
//! along an axis `m ≠ i` by the trapezoid rule, which couples all `g` at the
//! point into an `n × n` linear system. Taking the highest such axis or the
//! lowest gives two schemes; their difference is the mixed-derivative
//! defect. Both run at two refinements combined by Richardson extrapolation.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::pair::{ConservationPair, PairField};
use super::CongruenceError;
use crate::expr::Expr;
use crate::integrate::{Lattice, ScalarFieldGrid, BLOW_UP};
use crate::system::{check_semihamiltonian, CoeffTable, DiagonalSystem, SampleSet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityOptions {
    /// Sub-cells per lattice cell on the coarser of the two marches.
    pub refine: usize,
    /// Defects above `100 · tol` raise a warning.
    pub tol: f64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        DensityOptions {
            refine: 4,
            tol: 1e-9,
        }
    }
}

/// `g`, `N`, `M` per point of one march.
struct March {
    g: Vec<Vec<f64>>,
    n: Vec<f64>,
    m: Vec<f64>,
}

struct Coefficients {
    /// `a[f][i][k]` at each fine point.
    a: Vec<Vec<Vec<f64>>>,
    lambda: Vec<Vec<f64>>,
}

fn coefficients(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    l: &Lattice,
) -> Result<Coefficients, CongruenceError> {
    let n = sys.n;
    let rows: Vec<(Vec<Vec<f64>>, Vec<f64>)> = (0..l.len())
        .into_par_iter()
        .map(|f| {
            let u = l.point(&l.multi(f));
            let mut a = vec![vec![0.0; n]; n];
            for i in 0..n {
                for k in (0..n).filter(|&k| k != i) {
                    let e = table.a(i + 1, k + 1);
                    if !e.is_zero() {
                        a[i][k] = e.eval(&u).map_err(|err| {
                            CongruenceError::Eval(format!("a_{}{} at {u:?}: {err}", i + 1, k + 1))
                        })?;
                    }
                }
            }
            let lam = sys
                .speeds(&u)
                .map_err(|err| CongruenceError::Eval(format!("speeds at {u:?}: {err}")))?;
            Ok((a, lam))
        })
        .collect::<Result<_, CongruenceError>>()?;
    let (a, lambda) = rows.into_iter().unzip();
    Ok(Coefficients { a, lambda })
}

fn march(
    l: &Lattice,
    c: &Coefficients,
    axis: &[Expr],
    n0: f64,
    high: bool,
) -> Result<March, CongruenceError> {
    let n = l.dim();
    let len = l.len();
    let mut g = vec![vec![0.0; n]; len];
    let mut nv = vec![0.0; len];
    let mut mv = vec![0.0; len];
    let data = |i: usize, v: f64| {
        axis[i].eval(&[v]).map_err(|err| {
            CongruenceError::Eval(format!("axis derivative {} at {v}: {err}", i + 1))
        })
    };
    for i in 0..n {
        g[0][i] = data(i, l.base[i])?;
    }
    nv[0] = n0;
    for f in 1..len {
        let idx = l.multi(f);
        let u = l.point(&idx);
        let back = |m: usize| {
            let mut q = idx.clone();
            q[m] -= 1;
            l.flat(&q)
        };
        let mut mat = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for i in 0..n {
            let mut off = (0..n).filter(|&m| m != i && idx[m] > 0);
            let m = if high { off.next_back() } else { off.next() };
            match m {
                None => {
                    mat[(i, i)] = 1.0;
                    rhs[i] = data(i, u[i])?;
                }
                Some(m) => {
                    let q = back(m);
                    let h2 = l.steps[m] / 2.0;
                    let (ap, aq) = (&c.a[f], &c.a[q]);
                    mat[(i, i)] += 1.0 - h2 * ap[i][m];
                    mat[(i, m)] -= h2 * ap[m][i];
                    rhs[i] = g[q][i] + h2 * (aq[i][m] * g[q][i] + aq[m][i] * g[q][m]);
                }
            }
        }
        let sol = mat.lu().solve(&rhs).ok_or_else(|| {
            CongruenceError::Prerequisite(format!("singular march step at {u:?}"))
        })?;
        if sol.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP) {
            return Err(CongruenceError::BlowUp);
        }
        g[f] = sol.iter().copied().collect();
        // N and M by the trapezoid rule along the same choice of axis
        let mut nz = (0..n).filter(|&m| idx[m] > 0);
        let m = if high { nz.next_back() } else { nz.next() }.expect("off the base");
        let q = back(m);
        let h2 = l.steps[m] / 2.0;
        nv[f] = nv[q] + h2 * (g[q][m] + g[f][m]);
        mv[f] = mv[q] + h2 * (c.lambda[q][m] * g[q][m] + c.lambda[f][m] * g[f][m]);
    }
    Ok(March { g, n: nv, m: mv })
}

fn refine(l: &Lattice, r: usize) -> Lattice {
    Lattice::new(
        l.base.clone(),
        l.steps.iter().map(|h| h / r as f64).collect(),
        l.counts.iter().map(|c| (c - 1) * r + 1).collect(),
    )
}

/// Richardson-combined march restricted to the coarse lattice.
fn extrapolated(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    lattice: &Lattice,
    axis: &[Expr],
    n0: f64,
    r: usize,
    high: bool,
) -> Result<March, CongruenceError> {
    let (fine_l, coarse_l) = (refine(lattice, 2 * r), refine(lattice, r));
    let (cf, cc) = (
        coefficients(sys, table, &fine_l)?,
        coefficients(sys, table, &coarse_l)?,
    );
    let (fine, coarse) = (
        march(&fine_l, &cf, axis, n0, high)?,
        march(&coarse_l, &cc, axis, n0, high)?,
    );
    let pick = |sub: &Lattice, factor: usize, f: usize| {
        let idx: Vec<usize> = lattice.multi(f).iter().map(|i| i * factor).collect();
        sub.flat(&idx)
    };
    let comb = |a: f64, b: f64| (4.0 * a - b) / 3.0;
    let mut out = March {
        g: Vec::new(),
        n: Vec::new(),
        m: Vec::new(),
    };
    for f in 0..lattice.len() {
        let (pf, pc) = (pick(&fine_l, 2 * r, f), pick(&coarse_l, r, f));
        out.g.push(
            fine.g[pf]
                .iter()
                .zip(&coarse.g[pc])
                .map(|(a, b)| comb(*a, *b))
                .collect(),
        );
        out.n.push(comb(fine.n[pf], coarse.n[pc]));
        out.m.push(comb(fine.m[pf], coarse.m[pc]));
    }
    Ok(out)
}

/// A grid conservation pair on `lattice` (based at the base point) from
/// `axis[i](v)`, the density restricted to the `i`-th coordinate line
/// through the base as a function written in `u1`. Only the derivatives of
/// the axis data enter, plus the value of the first at the base.
pub fn solve_density(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    samples: &SampleSet,
    axis: &[Expr],
    lattice: &Lattice,
    opts: &DensityOptions,
) -> Result<ConservationPair, CongruenceError> {
    let n = sys.n;
    if axis.len() != n || lattice.dim() != n || opts.refine == 0 {
        return Err(CongruenceError::Prerequisite(format!(
            "need {n} axis functions and an {n}-dimensional lattice"
        )));
    }
    if axis.iter().any(|f| f.max_var() > 1) {
        return Err(CongruenceError::Prerequisite(
            "axis data must be functions of one variable written in u1".into(),
        ));
    }
    let sh = check_semihamiltonian(sys, table, samples);
    if !sh.holds {
        return Err(CongruenceError::Prerequisite(format!(
            "not semihamiltonian (residual {:e}); the density equation is inconsistent",
            sh.residual.max
        )));
    }
    let derivs: Vec<Expr> = axis.iter().map(|f| f.derivative(1).simplify()).collect();
    let n0 = axis[0]
        .eval(&[lattice.base[0]])
        .map_err(|err| CongruenceError::Eval(format!("axis data at the base: {err}")))?;
    let (canon, alt) = rayon::join(
        || extrapolated(sys, table, lattice, &derivs, n0, opts.refine, true),
        || extrapolated(sys, table, lattice, &derivs, n0, opts.refine, false),
    );
    let (canon, alt) = (canon?, alt?);
    let mut defect: f64 = 0.0;
    for f in 0..lattice.len() {
        let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + a.abs());
        defect = defect
            .max(rel(canon.n[f], alt.n[f]))
            .max(rel(canon.m[f], alt.m[f]));
        for i in 0..n {
            defect = defect.max(rel(canon.g[f][i], alt.g[f][i]));
        }
    }
    let grid = |v: Vec<f64>| ScalarFieldGrid::new(lattice.clone(), v, defect);
    let g = (0..n)
        .map(|i| grid(canon.g.iter().map(|row| row[i]).collect()))
        .collect();
    Ok(ConservationPair {
        field: PairField::Grid {
            n: grid(canon.n),
            m: grid(canon.m),
            g,
        },
        defect,
        warning: (defect > 100.0 * opts.tol).then(|| format!("mixed-derivative defect {defect:e}")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::system::builtin;

    fn setup(sys: &DiagonalSystem) -> (SampleSet, CoeffTable) {
        let s = sys.sample().unwrap();
        let t = CoeffTable::build(sys, &s);
        (s, t)
    }

    fn grids(p: &ConservationPair) -> (&ScalarFieldGrid, &ScalarFieldGrid, &[ScalarFieldGrid]) {
        match &p.field {
            PairField::Grid { n, m, g } => (n, m, g),
            PairField::Closed { .. } => unreachable!(),
        }
    }

    #[test]
    fn decoupled_sum_is_reproduced() {
        let sys = DiagonalSystem::from_strs(&["0", "1"], vec![(0.0, 1.0); 2]).unwrap();
        let (s, t) = setup(&sys);
        let axis = [
            parse("sin(u1) + 0.5", 1).unwrap(),
            parse("u1^2 + sin(0)", 1).unwrap(),
        ];
        let l = Lattice::new(vec![0.0, 0.0], vec![0.1, 0.1], vec![11, 11]);
        let p = solve_density(&sys, &t, &s, &axis, &l, &DensityOptions::default()).unwrap();
        let (n, m, _) = grids(&p);
        for f in 0..l.len() {
            let u = l.point(&l.multi(f));
            // N = sin u1 + u2² + 0.5, M = ∫ λ^2 · 2 u2 du2 = u2²
            assert!((n.values[f] - (u[0].sin() + u[1] * u[1] + 0.5)).abs() < 1e-9);
            assert!((m.values[f] - u[1] * u[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_data_gives_constant_pair() {
        let sys = builtin("lindeg2").unwrap();
        let (s, t) = setup(&sys);
        let axis = [Expr::constant(3.0), Expr::constant(3.0)];
        let l = Lattice::new(vec![2.0, 1.0], vec![0.05, -0.04], vec![9, 9]);
        let p = solve_density(&sys, &t, &s, &axis, &l, &DensityOptions::default()).unwrap();
        let (n, m, g) = grids(&p);
        assert!(n.values.iter().all(|&v| v == 3.0));
        assert!(m.values.iter().all(|&v| v == 0.0));
        assert!(g.iter().all(|gi| gi.values.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn swapped_pair_density_is_consistent() {
        let sys = builtin("lindeg2").unwrap();
        let (s, t) = setup(&sys);
        let axis = [Expr::var(1), Expr::var(1)];
        let l = Lattice::new(vec![2.0, 1.0], vec![1.0 / 19.0, -0.5 / 19.0], vec![20, 20]);
        let p = solve_density(&sys, &t, &s, &axis, &l, &DensityOptions::default()).unwrap();
        assert!(p.defect <= 1e-6, "{}", p.defect);
        let r = p.fd_residuals(&sys, &t).unwrap();
        assert!(r.flux <= 1e-6 && r.density <= 1e-6, "{r:?}");
    }

    #[test]
    fn matches_a_closed_form_density() {
        // N = u1 + u2 + 3/(u1 − u2) solves N_12 = (N_1 − N_2)/(u1 − u2)
        let sys = builtin("lindeg2").unwrap();
        let (s, t) = setup(&sys);
        let (b1, b2) = (2.0, 1.0);
        let axis = [
            parse(&format!("u1 + {b2} + 3/(u1 - {b2})"), 1).unwrap(),
            parse(&format!("{b1} + u1 + 3/({b1} - u1)"), 1).unwrap(),
        ];
        let l = Lattice::new(vec![b1, b2], vec![0.1, -0.08], vec![11, 11]);
        let err = |refine: usize| {
            let p = solve_density(
                &sys,
                &t,
                &s,
                &axis,
                &l,
                &DensityOptions {
                    refine,
                    ..Default::default()
                },
            )
            .unwrap();
            let (n, m, g) = grids(&p);
            let mut worst: f64 = 0.0;
            for f in 0..l.len() {
                let u = l.point(&l.multi(f));
                let w = u[0] - u[1];
                worst = worst.max((n.values[f] - (u[0] + u[1] + 3.0 / w)).abs());
                worst = worst.max((g[0].values[f] - (1.0 - 3.0 / (w * w))).abs());
                worst = worst.max((g[1].values[f] - (1.0 + 3.0 / (w * w))).abs());
                // ∂_1 M = u2 N_1, ∂_2 M = u1 N_2: M = u1 u2 + 1.5 (u1 + u2)/(u1 − u2) + const
                let mm = |a: f64, b: f64| a * b + 1.5 * (a + b) / (a - b);
                worst = worst.max((m.values[f] - (mm(u[0], u[1]) - mm(b1, b2))).abs());
            }
            worst
        };
        // Richardson leaves a fourth-order error
        let (e4, e8) = (err(4), err(8));
        assert!(e8 < 1e-8 && e4 / e8 >= 8.0, "{e4} {e8}");
    }

    #[test]
    fn non_semihamiltonian_is_refused() {
        let sys = builtin("nonsemiham3").unwrap();
        let (s, t) = setup(&sys);
        let l = Lattice::spanning(&sys.domain, 3);
        let axis = vec![Expr::var(1); 3];
        assert!(matches!(
            solve_density(&sys, &t, &s, &axis, &l, &DensityOptions::default()),
            Err(CongruenceError::Prerequisite(_))
        ));
    }

    #[test]
    fn three_component_closed_form() {
        // λ^i = s + c_i: N = exp(Σ u^i/(c_i + 1)), M = (s − 1) N
        let sys = builtin("shifted3").unwrap();
        let (s, t) = setup(&sys);
        let b = [-0.5, -0.4, -0.3];
        let c = [1.0, 2.0, 3.0];
        let exact = |u: &[f64]| (0..3).map(|i| u[i] / c[i]).sum::<f64>().exp();
        let axis: Vec<Expr> = (0..3)
            .map(|i| {
                let e: Vec<String> = (0..3)
                    .map(|k| {
                        if k == i {
                            format!("u1/{}", c[k])
                        } else {
                            format!("{}/{}", b[k], c[k])
                        }
                    })
                    .collect();
                parse(&format!("exp({})", e.join(" + ")), 1).unwrap()
            })
            .collect();
        let err = |count: usize| {
            let h = 0.6 / (count - 1) as f64;
            let l = Lattice::new(b.to_vec(), vec![h; 3], vec![count; 3]);
            let p = solve_density(&sys, &t, &s, &axis, &l, &DensityOptions::default()).unwrap();
            let (n, m, _) = grids(&p);
            let m0 = (b.iter().sum::<f64>() - 1.0) * exact(&b);
            let mut worst: f64 = 0.0;
            for f in 0..l.len() {
                let u = l.point(&l.multi(f));
                let ne = exact(&u);
                worst = worst.max((n.values[f] - ne).abs());
                worst = worst.max((m.values[f] - ((u.iter().sum::<f64>() - 1.0) * ne - m0)).abs());
            }
            eprintln!("{count} {worst:e}");
            worst
        };
        let (e1, e2) = (err(4), err(7));
        assert!(e2 < 1e-7 && e1 / e2 >= 8.0, "{e1} {e2}");
    }
}
