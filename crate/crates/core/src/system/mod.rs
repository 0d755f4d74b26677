//! Diagonal systems `u^i_t = λ^i(u) u^i_x` and their coefficient tables.
//!
//! A [`DiagonalSystem`] owns the speeds and a domain box. Everything that
//! needs numbers samples the box through [`DiagonalSystem::sample`]; the
//! diagnostics in `checks` evaluate identities at those samples and say
//! separately whether the identity also reduced to a literal zero.

mod builtin;
mod checks;
mod file;
mod sampling;

use thiserror::Error;

use crate::expr::{parse, Expr, ParseError};

pub use builtin::{builtin, builtin_names, builtin_source};
pub use checks::{
    check_commuting_compatibility, check_darboux_order0, check_darboux_order1,
    check_linear_degeneracy, check_semihamiltonian, full_report, Check, DiagnosticsReport, Order0,
    Order1, Order1Verdict,
};
pub use file::SystemFile;
pub use sampling::{identity_residual, Residual, SampleSet};

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("expected {expected} {what}, got {got}")]
    Count {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("empty domain interval for u{axis}: [{lo}, {hi}]")]
    EmptyDomain { axis: usize, lo: f64, hi: f64 },
    #[error("speed l{index}: {source}")]
    Parse { index: usize, source: ParseError },
    #[error("not strictly hyperbolic: {rejected} of {attempted} sample points rejected, worst gap {gap:e} at {witness:?}")]
    NotStrictlyHyperbolic {
        rejected: usize,
        attempted: usize,
        gap: f64,
        witness: Vec<f64>,
    },
    #[error("system file: {0}")]
    File(String),
    #[error("unknown built-in system `{0}`")]
    UnknownBuiltin(String),
}

/// A diagonal system of hydrodynamic type on a box.
#[derive(Clone, Debug)]
pub struct DiagonalSystem {
    pub n: usize,
    pub lambdas: Vec<Expr>,
    pub domain: Vec<(f64, f64)>,
    pub eps_hyp: f64,
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
}

impl DiagonalSystem {
    pub fn new(lambdas: Vec<Expr>, domain: Vec<(f64, f64)>) -> Result<Self, SystemError> {
        let n = lambdas.len();
        if n < 2 {
            return Err(SystemError::Dimension(n));
        }
        if domain.len() != n {
            return Err(SystemError::Count {
                what: "domain intervals",
                expected: n,
                got: domain.len(),
            });
        }
        for (k, &(lo, hi)) in domain.iter().enumerate() {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(SystemError::EmptyDomain {
                    axis: k + 1,
                    lo,
                    hi,
                });
            }
        }
        Ok(DiagonalSystem {
            n,
            lambdas,
            domain,
            eps_hyp: 1e-8,
            tol: 1e-9,
            samples: 200,
            seed: 0,
        })
    }

    /// Parse speeds from strings over `u1..un`.
    pub fn from_strs(lambdas: &[&str], domain: Vec<(f64, f64)>) -> Result<Self, SystemError> {
        let n = lambdas.len();
        let exprs = lambdas
            .iter()
            .enumerate()
            .map(|(k, s)| {
                parse(s, n).map_err(|source| SystemError::Parse {
                    index: k + 1,
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        DiagonalSystem::new(exprs, domain)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    /// Speed `λ^i`, 1-based.
    pub fn lambda(&self, i: usize) -> &Expr {
        &self.lambdas[i - 1]
    }

    /// Centre of the domain box.
    pub fn centre(&self) -> Vec<f64> {
        self.domain.iter().map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Same domain and tolerances with new speeds.
    pub fn with_lambdas(&self, lambdas: Vec<Expr>) -> Self {
        DiagonalSystem {
            lambdas,
            ..self.clone()
        }
    }

    /// Evaluate all speeds at `p`.
    pub fn speeds(&self, p: &[f64]) -> Result<Vec<f64>, crate::expr::EvalError> {
        self.lambdas.iter().map(|l| l.eval(p)).collect()
    }

    /// Coefficient table; refuses when the system is not strictly hyperbolic.
    pub fn coefficient_table(&self) -> Result<CoeffTable, SystemError> {
        let samples = self.sample()?;
        Ok(CoeffTable::build(self, &samples))
    }

    pub fn printed_lambdas(&self) -> Vec<String> {
        self.lambdas.iter().map(|l| l.to_string()).collect()
    }
}

/// Off-diagonal coefficients `a_ij` and `b_ij` with zero flags.
///
/// Indices are 1-based. `b_ij` is absent when `a_ij` is zero, syntactically
/// or at every sample.
#[derive(Clone, Debug)]
pub struct CoeffTable {
    pub n: usize,
    dlambda: Vec<Expr>,
    a: Vec<Expr>,
    b: Vec<Option<Expr>>,
    zero: Vec<bool>,
    numeric_zero: Vec<bool>,
}

impl CoeffTable {
    /// Build from speeds; `samples` decide numeric zeros.
    pub fn build(sys: &DiagonalSystem, samples: &SampleSet) -> Self {
        let n = sys.n;
        let mut dlambda = Vec::with_capacity(n * n);
        for i in 1..=n {
            for k in 1..=n {
                dlambda.push(sys.lambda(i).derivative(k));
            }
        }
        let mut a = vec![Expr::zero(); n * n];
        let mut zero = vec![false; n * n];
        let mut numeric_zero = vec![false; n * n];
        for i in 1..=n {
            for j in 1..=n {
                if i == j {
                    continue;
                }
                let num = &dlambda[(i - 1) * n + (j - 1)];
                let e = (num / &(sys.lambda(j) - sys.lambda(i))).simplify();
                let at = (i - 1) * n + (j - 1);
                zero[at] = e.is_zero();
                numeric_zero[at] = zero[at] || e.is_numerically_zero(&samples.points, sys.tol);
                a[at] = e;
            }
        }
        let mut b = vec![None; n * n];
        for i in 1..=n {
            for j in 1..=n {
                let at = (i - 1) * n + (j - 1);
                if i == j || numeric_zero[at] {
                    continue;
                }
                let aij = &a[at];
                let aji = &a[(j - 1) * n + (i - 1)];
                b[at] = Some((aij.derivative(i) / aij.clone() - aji.clone()).simplify());
            }
        }
        CoeffTable {
            n,
            dlambda,
            a,
            b,
            zero,
            numeric_zero,
        }
    }

    fn at(&self, i: usize, j: usize) -> usize {
        assert!(
            i != j && (1..=self.n).contains(&i) && (1..=self.n).contains(&j),
            "bad pair ({i},{j})"
        );
        (i - 1) * self.n + (j - 1)
    }

    pub fn a(&self, i: usize, j: usize) -> &Expr {
        &self.a[self.at(i, j)]
    }

    pub fn b(&self, i: usize, j: usize) -> Option<&Expr> {
        self.b[self.at(i, j)].as_ref()
    }

    /// `∂_k λ^i`, diagonal included.
    pub fn dlambda(&self, i: usize, k: usize) -> &Expr {
        &self.dlambda[(i - 1) * self.n + (k - 1)]
    }

    /// `a_ij` is a literal zero after simplification.
    pub fn is_zero(&self, i: usize, j: usize) -> bool {
        self.zero[self.at(i, j)]
    }

    /// `a_ij` is zero syntactically or at every sample.
    pub fn is_numeric_zero(&self, i: usize, j: usize) -> bool {
        self.numeric_zero[self.at(i, j)]
    }

    pub fn zero_flags(&self) -> Vec<Vec<bool>> {
        (1..=self.n)
            .map(|i| (1..=self.n).map(|j| i != j && self.is_zero(i, j)).collect())
            .collect()
    }

    /// Every `a_ij` vanishes.
    pub fn all_zero(&self) -> bool {
        (1..=self.n).all(|i| (1..=self.n).all(|j| i == j || self.is_numeric_zero(i, j)))
    }

    /// Residual of `(λ^j − λ^i) a_ij − ∂_j λ^i` over all pairs.
    pub fn defining_identity(&self, sys: &DiagonalSystem, samples: &SampleSet) -> Residual {
        let mut out = Residual::zero();
        for i in 1..=self.n {
            for j in 1..=self.n {
                if i != j {
                    let lhs = (sys.lambda(j) - sys.lambda(i)) * self.a(i, j).clone();
                    let r = identity_residual(&[lhs, -self.dlambda(i, j).clone()], &samples.points);
                    out.absorb(r);
                }
            }
        }
        out
    }

    /// Residual between the two formulas for `b_ij` at points where `λ^i_j ≠ 0`.
    pub fn b_formula_residual(&self, sys: &DiagonalSystem, samples: &SampleSet) -> Residual {
        let mut out = Residual::zero();
        for i in 1..=self.n {
            for j in 1..=self.n {
                let Some(b) = (i != j).then(|| self.b(i, j)).flatten() else {
                    continue;
                };
                let lij = self.dlambda(i, j);
                let alt = self.dlambda(i, j).derivative(i) / lij.clone()
                    + self.dlambda(i, i).clone() / (sys.lambda(j) - sys.lambda(i));
                let pts: Vec<Vec<f64>> = samples
                    .points
                    .iter()
                    .filter(|p| lij.eval(p).map(|v| v.abs() > sys.tol).unwrap_or(false))
                    .cloned()
                    .collect();
                out.absorb(identity_residual(&[alt, -b.clone()], &pts));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(e: &Expr, p: &[f64], k: usize) -> f64 {
        let h = 1e-5;
        let mut a = p.to_vec();
        let mut b = p.to_vec();
        a[k - 1] += h;
        b[k - 1] -= h;
        (e.eval(&a).unwrap() - e.eval(&b).unwrap()) / (2.0 * h)
    }

    #[test]
    fn swapped_pair_coefficient() {
        let sys = builtin("lindeg2").unwrap();
        let t = sys.coefficient_table().unwrap();
        let p = [2.0, 1.0];
        let a12 = t.a(1, 2).eval(&p).unwrap();
        assert!((a12 - 1.0).abs() < 1e-14);
        // independent: ∂_2 λ^1 by central difference over the speed gap
        let oracle = fd(sys.lambda(1), &p, 2) / (p[0] - p[1]);
        assert!((a12 - oracle).abs() < 1e-9);
    }

    #[test]
    fn constant_speeds_have_zero_table() {
        let t = builtin("constant2").unwrap().coefficient_table().unwrap();
        assert_eq!(t.zero_flags(), vec![vec![false, true], vec![true, false]]);
        assert!(t.b(1, 2).is_none() && t.all_zero());
    }

    #[test]
    fn shifted_family_coefficients() {
        let sys = builtin("shifted3").unwrap();
        let t = sys.coefficient_table().unwrap();
        let c = [0.0, 1.0, 2.0];
        for p in [[0.0, 0.0, 0.0], [0.3, -0.7, 0.9]] {
            for i in 1..=3 {
                for j in 1..=3 {
                    if i != j {
                        let v = t.a(i, j).eval(&p).unwrap();
                        assert!((v - 1.0 / (c[j - 1] - c[i - 1])).abs() < 1e-12);
                        let oracle = fd(sys.lambda(i), &p, j) / (c[j - 1] - c[i - 1]);
                        assert!((v - oracle).abs() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn identities_hold_on_builtins() {
        for name in builtin_names() {
            let sys = builtin(name).unwrap();
            let s = sys.sample().unwrap();
            let t = CoeffTable::build(&sys, &s);
            assert!(t.defining_identity(&sys, &s).max <= 1e-9, "{name}");
            assert!(t.b_formula_residual(&sys, &s).max <= 1e-9, "{name}");
        }
    }

    #[test]
    fn coinciding_speeds_are_refused() {
        let sys = DiagonalSystem::from_strs(&["u2", "u2"], vec![(0.0, 1.0); 2]).unwrap();
        assert!(matches!(
            sys.coefficient_table(),
            Err(SystemError::NotStrictlyHyperbolic { .. })
        ));
    }

    #[test]
    fn constructor_validation() {
        assert!(matches!(
            DiagonalSystem::from_strs(&["u1"], vec![(0.0, 1.0)]),
            Err(SystemError::Dimension(1))
        ));
        assert!(matches!(
            DiagonalSystem::from_strs(&["u1", "u2"], vec![(0.0, 1.0), (2.0, 1.0)]),
            Err(SystemError::EmptyDomain { axis: 2, .. })
        ));
        assert!(matches!(
            DiagonalSystem::from_strs(&["u1", "u3"], vec![(0.0, 1.0); 2]),
            Err(SystemError::Parse { index: 2, .. })
        ));
    }
}
