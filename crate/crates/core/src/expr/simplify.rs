use super::{BinaryOp, Expr, UnaryOp};

const MAX_PASSES: usize = 64;

impl Expr {
    /// Light algebraic cleanup: constant folding, identities for 0 and 1, sign
    /// normalisation, like terms in sums merged, and `x / x` cancellation of
    /// identical subtrees.
    ///
    /// Rewrites run bottom-up until nothing changes, so the result is a fixed
    /// point and `simplify` is idempotent. Wherever the input evaluates, the
    /// output evaluates to the same value.
    pub fn simplify(&self) -> Expr {
        let mut cur = self.clone();
        for _ in 0..MAX_PASSES {
            let next = pass(&cur);
            if next == cur {
                return cur;
            }
            cur = next;
        }
        cur
    }
}

fn pass(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) | Expr::Var(_) => e.clone(),
        Expr::Unary(op, a) => unary(*op, pass(a)),
        Expr::Binary(op, a, b) => binary(*op, pass(a), pass(b)),
    }
}

/// Negation that absorbs into literals and double negations.
fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Unary(UnaryOp::Neg, inner) => inner.as_ref().clone(),
        other => Expr::unary(UnaryOp::Neg, other),
    }
}

fn fold(v: Option<f64>, fallback: Expr) -> Expr {
    match v {
        Some(v) if v.is_finite() => Expr::Const(if v == 0.0 { 0.0 } else { v }),
        _ => fallback,
    }
}

fn unary(op: UnaryOp, a: Expr) -> Expr {
    if op == UnaryOp::Neg {
        return neg(a);
    }
    let rebuilt = Expr::unary(op, a.clone());
    if a.as_const().is_some() {
        return fold(rebuilt.eval(&[]).ok(), rebuilt);
    }
    rebuilt
}

fn binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
    if a.as_const().is_some() && b.as_const().is_some() {
        let rebuilt = Expr::binary(op, a, b);
        return fold(rebuilt.eval(&[]).ok(), rebuilt);
    }
    match op {
        BinaryOp::Add | BinaryOp::Sub => collect(&Expr::binary(op, a, b)),
        BinaryOp::Mul => {
            if a.is_zero() || b.is_zero() {
                return Expr::zero();
            }
            if a.is_one() {
                return b;
            }
            if b.is_one() {
                return a;
            }
            if a.as_const() == Some(-1.0) {
                return neg(b);
            }
            if b.as_const() == Some(-1.0) {
                return neg(a);
            }
            if a.as_const().is_some_and(f64::is_finite) {
                return collect(&Expr::binary(op, a, b));
            }
            match (&a, &b) {
                (Expr::Unary(UnaryOp::Neg, x), Expr::Unary(UnaryOp::Neg, y)) => {
                    Expr::binary(op, x.as_ref().clone(), y.as_ref().clone())
                }
                (Expr::Unary(UnaryOp::Neg, x), _) => neg(Expr::binary(op, x.as_ref().clone(), b)),
                (_, Expr::Unary(UnaryOp::Neg, y)) => neg(Expr::binary(op, a, y.as_ref().clone())),
                // constants to the front
                (_, Expr::Const(_)) if a.as_const().is_none() => Expr::binary(op, b, a),
                _ => Expr::binary(op, a, b),
            }
        }
        BinaryOp::Div => {
            if b.is_one() {
                return a;
            }
            if a.is_zero() {
                return Expr::zero();
            }
            if a == b {
                return Expr::one();
            }
            if let (true, Expr::Binary(BinaryOp::Div, n, d)) = (a.is_one(), &b) {
                if n.is_one() {
                    return d.as_ref().clone();
                }
            }
            if b.as_const() == Some(-1.0) {
                return neg(a);
            }
            if b.as_const().is_some_and(|c| c != 0.0 && c.is_finite()) {
                return collect(&Expr::binary(op, a, b));
            }
            match (&a, &b) {
                (Expr::Unary(UnaryOp::Neg, x), _) => neg(Expr::binary(op, x.as_ref().clone(), b)),
                (_, Expr::Unary(UnaryOp::Neg, y)) => Expr::binary(op, neg(a), y.as_ref().clone()),
                _ => Expr::binary(op, a, b),
            }
        }
        BinaryOp::Pow => {
            if b.is_one() {
                return a;
            }
            if b.is_zero() || a.is_one() {
                return Expr::one();
            }
            Expr::binary(op, a, b)
        }
    }
}

/// Flatten a sum into `(coefficient, atom)` terms plus a constant. Literal
/// scale factors and divisors distribute over nested sums.
fn terms(e: &Expr, sign: f64, out: &mut Vec<(f64, Expr)>, konst: &mut f64) {
    match e {
        Expr::Const(c) => *konst += sign * c,
        Expr::Binary(BinaryOp::Add, a, b) => {
            terms(a, sign, out, konst);
            terms(b, sign, out, konst);
        }
        Expr::Binary(BinaryOp::Sub, a, b) => {
            terms(a, sign, out, konst);
            terms(b, -sign, out, konst);
        }
        Expr::Unary(UnaryOp::Neg, a) => terms(a, -sign, out, konst),
        Expr::Binary(BinaryOp::Mul, c, x) if c.as_const().is_some_and(f64::is_finite) => {
            terms(x, sign * c.as_const().unwrap(), out, konst)
        }
        Expr::Binary(BinaryOp::Div, x, c)
            if c.as_const().is_some_and(|c| c != 0.0 && c.is_finite()) =>
        {
            terms(x, sign / c.as_const().unwrap(), out, konst)
        }
        _ => match out.iter_mut().find(|(_, atom)| atom == e) {
            Some((coef, _)) => *coef += sign,
            None => out.push((sign, e.clone())),
        },
    }
}

/// Like terms merged, in order of first appearance, constant last.
fn collect(e: &Expr) -> Expr {
    let (mut out, mut konst) = (Vec::new(), 0.0);
    terms(e, 1.0, &mut out, &mut konst);
    if !konst.is_finite() || out.iter().any(|(c, _)| !c.is_finite()) {
        return e.clone();
    }
    let mut acc: Option<Expr> = None;
    for (c, atom) in out.into_iter().filter(|(c, _)| *c != 0.0) {
        let (m, k) = (c.abs(), 1.0 / c.abs());
        let t = if m == 1.0 {
            atom
        } else if k.fract() == 0.0 && 1.0 / k == m {
            // u/2 rather than 0.5*u
            Expr::binary(BinaryOp::Div, atom, Expr::Const(k))
        } else {
            Expr::binary(BinaryOp::Mul, Expr::Const(m), atom)
        };
        acc = Some(match acc {
            None if c < 0.0 => neg(t),
            None => t,
            Some(s) if c < 0.0 => Expr::binary(BinaryOp::Sub, s, t),
            Some(s) => Expr::binary(BinaryOp::Add, s, t),
        });
    }
    match acc {
        None => Expr::Const(if konst == 0.0 { 0.0 } else { konst }),
        Some(s) if konst > 0.0 => Expr::binary(BinaryOp::Add, s, Expr::Const(konst)),
        Some(s) if konst < 0.0 => Expr::binary(BinaryOp::Sub, s, Expr::Const(-konst)),
        Some(s) => s,
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Expr};

    fn s(text: &str) -> String {
        parse(text, 3).unwrap().simplify().to_string()
    }

    #[test]
    fn identities() {
        assert_eq!(s("0 + u1"), "u1");
        assert_eq!(s("u1*1 - 0"), "u1");
        assert_eq!(s("u1 - u1"), "0");
        assert_eq!(s("u2*0 + u3"), "u3");
        assert_eq!(s("(u1 + u2)/(u1 + u2)"), "1");
        assert_eq!(s("u1^1 + u2^0"), "u1 + 1");
        assert_eq!(s("2*3 + u1"), "u1 + 6");
        assert_eq!(s("-(-u1)"), "u1");
        assert_eq!(s("u1 + -u2"), "u1 - u2");
        assert_eq!(s("u1*(-1)"), "-u1");
    }

    #[test]
    fn swap_reciprocal_and_identity() {
        let l = parse("u2/u1", 2).unwrap();
        let num = Expr::zero() * l.clone() - Expr::one();
        let den = Expr::zero() - Expr::one() * l.clone();
        assert_eq!((num / den).simplify(), Expr::one() / l.clone());
        let num = Expr::one() * l.clone() - Expr::zero();
        let den = Expr::one() - Expr::zero();
        assert_eq!((num / den).simplify(), l);
    }

    #[test]
    fn like_terms_collect() {
        assert_eq!(s("u1 + u2 - (u1 + u2 + 1)"), "-1");
        assert_eq!(s("1/(1/(u1 - (u1 + 1))) + u1"), "u1 - 1");
        assert_eq!(s("(u1 + 2 + u1)/2"), "u1 + 1");
        assert_eq!(s("3*u2 - u1 - 2*u2 + u1*u3"), "u2 - u1 + u1*u3");
        assert_eq!(s("-(u1 + u1)"), "-(2*u1)");
        assert_eq!(s("0.25*(u1/2)"), "u1/8");
        assert_eq!(s("u1/2 + u1/3"), "0.8333333333333333*u1");
        assert_eq!(s("-0.125*u2"), "-(u2/8)");
        assert_eq!(s("2*(u1 - 3)"), "2*u1 - 6");
    }

    #[test]
    fn domain_errors_are_not_folded() {
        assert_eq!(s("log(0)"), "log(0)");
        assert_eq!(s("1/0"), "1/0");
        assert_eq!(s("log(1)"), "0");
    }

    #[test]
    fn idempotent_on_samples() {
        for t in [
            "u1*(-2)*(-u2)",
            "-(u1 - u1)/u3",
            "(0 - u1)^2",
            "exp(0)*u1 - -3",
        ] {
            let once = parse(t, 3).unwrap().simplify();
            assert_eq!(once.simplify(), once, "{t}");
        }
    }
}
