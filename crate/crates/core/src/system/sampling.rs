//! Seeded sample points and residual evaluation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{DiagonalSystem, SystemError};
use crate::expr::Expr;

const RESAMPLE_TRIES: usize = 32;

/// Accepted sample points plus the hyperbolicity bookkeeping behind them.
#[derive(Clone, Debug, Serialize)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    pub attempted: usize,
    pub rejected: usize,
    /// Smallest `|λ^i − λ^j|` over accepted points.
    pub worst_gap: f64,
    pub worst_gap_point: Vec<f64>,
}

/// Worst scaled residual of an identity and where it happened.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residual {
    pub max: f64,
    pub witness: Option<Vec<f64>>,
    /// The identity reduced to a literal zero.
    pub symbolic: bool,
}

impl Residual {
    pub fn zero() -> Self {
        Residual {
            max: 0.0,
            witness: None,
            symbolic: true,
        }
    }

    /// Merge another residual: worst value wins, symbolic only if both are.
    pub fn absorb(&mut self, other: Residual) {
        self.symbolic &= other.symbolic;
        if other.max > self.max
            || (self.witness.is_none() && other.witness.is_some() && other.max >= self.max)
        {
            self.max = other.max;
            self.witness = other.witness;
        }
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max <= tol
    }
}

/// Scaled residual of `Σ terms = 0`: `|Σ t| / (1 + max |t|)` at each point.
///
/// A point where any term fails to evaluate gives an infinite residual.
pub fn identity_residual(terms: &[Expr], points: &[Vec<f64>]) -> Residual {
    let total = terms.iter().skip(1).fold(
        terms.first().cloned().unwrap_or_else(Expr::zero),
        |acc, t| acc + t.clone(),
    );
    if total.simplify().is_zero() {
        return Residual::zero();
    }
    let values: Vec<f64> = points
        .par_iter()
        .map(|p| {
            let mut sum = 0.0;
            let mut scale: f64 = 0.0;
            for t in terms {
                match t.eval(p) {
                    Ok(v) => {
                        sum += v;
                        scale = scale.max(v.abs());
                    }
                    Err(_) => return f64::INFINITY,
                }
            }
            sum.abs() / (1.0 + scale)
        })
        .collect();
    let mut out = Residual {
        max: 0.0,
        witness: None,
        symbolic: false,
    };
    for (p, v) in points.iter().zip(values) {
        if v > out.max || (v.is_nan() && !out.max.is_nan()) {
            out.max = if v.is_nan() { f64::INFINITY } else { v };
            out.witness = Some(p.clone());
        }
    }
    out
}

fn min_gap(speeds: &[f64]) -> f64 {
    let mut g = f64::INFINITY;
    for i in 0..speeds.len() {
        for j in i + 1..speeds.len() {
            g = g.min((speeds[i] - speeds[j]).abs());
        }
    }
    g
}

impl DiagonalSystem {
    /// Latin-hypercube points plus the box corners, seeded.
    ///
    /// Points whose speed gap falls below `eps_hyp`, or where a speed fails
    /// to evaluate, are redrawn uniformly. More than 10% rejections means
    /// the system is not strictly hyperbolic on its box.
    pub fn sample(&self) -> Result<SampleSet, SystemError> {
        let set = self.sample_unchecked();
        if set.rejected * 10 > set.attempted || set.points.is_empty() {
            return Err(SystemError::NotStrictlyHyperbolic {
                rejected: set.rejected,
                attempted: set.attempted,
                gap: set.worst_gap,
                witness: set.worst_gap_point,
            });
        }
        Ok(set)
    }

    /// Sampling without the hyperbolicity verdict.
    pub fn sample_unchecked(&self) -> SampleSet {
        let n = self.n;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let m = self.samples;
        let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(m + (1 << n));
        let strata: Vec<Vec<usize>> = (0..n)
            .map(|_| {
                let mut perm: Vec<usize> = (0..m).collect();
                for s in (1..m).rev() {
                    perm.swap(s, rng.gen_range(0..=s));
                }
                perm
            })
            .collect();
        for s in 0..m {
            let p = (0..n)
                .map(|k| {
                    let (lo, hi) = self.domain[k];
                    lo + (hi - lo) * (strata[k][s] as f64 + rng.gen::<f64>()) / m as f64
                })
                .collect();
            candidates.push(p);
        }
        if n <= 12 {
            for mask in 0..(1usize << n) {
                candidates.push(
                    (0..n)
                        .map(|k| {
                            if mask >> k & 1 == 1 {
                                self.domain[k].1
                            } else {
                                self.domain[k].0
                            }
                        })
                        .collect(),
                );
            }
        }
        let attempted = candidates.len();
        let mut rejected = 0;
        let mut worst_gap = f64::INFINITY;
        let mut worst_rejected = (f64::INFINITY, Vec::new());
        let mut worst_gap_point = Vec::new();
        let mut points = Vec::with_capacity(attempted);
        let gap_at = |p: &[f64]| self.speeds(p).ok().map(|s| min_gap(&s));
        for cand in candidates {
            let mut p = cand;
            let mut ok = false;
            for attempt in 0..=RESAMPLE_TRIES {
                match gap_at(&p) {
                    Some(g) if g >= self.eps_hyp => {
                        if g < worst_gap {
                            worst_gap = g;
                            worst_gap_point = p.clone();
                        }
                        ok = true;
                        break;
                    }
                    g => {
                        let g = g.unwrap_or(0.0);
                        if attempt == 0 && g < worst_rejected.0 {
                            worst_rejected = (g, p.clone());
                        }
                        if attempt == 0 {
                            rejected += 1;
                        }
                        p = (0..n)
                            .map(|k| rng.gen_range(self.domain[k].0..=self.domain[k].1))
                            .collect();
                    }
                }
            }
            if ok {
                points.push(p);
            }
        }
        if rejected * 10 > attempted || points.is_empty() {
            worst_gap = worst_rejected.0;
            worst_gap_point = worst_rejected.1;
        }
        SampleSet {
            points,
            attempted,
            rejected,
            worst_gap,
            worst_gap_point,
        }
    }
}
