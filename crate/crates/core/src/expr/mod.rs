//! Symbolic expressions over the Riemann invariants `u1..un`.
//!
//! An [`Expr`] is an immutable tree. Subtrees are shared through [`Arc`], so
//! cloning is cheap and expressions can be handed to worker threads freely.
//! The module provides the four operations everything else is built on:
//! parsing ([`parse`]), exact partial differentiation ([`Expr::derivative`]),
//! light simplification ([`Expr::simplify`]) and point evaluation
//! ([`Expr::eval`]).

use std::fmt;
use std::sync::Arc;

mod diff;
mod eval;
mod parse;
mod simplify;

pub use eval::EvalError;
pub use parse::{parse, ParseError};

/// Unary operators and elementary functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
}

impl UnaryOp {
    pub(crate) fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Tanh => "tanh",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sqrt" => UnaryOp::Sqrt,
            "tanh" => UnaryOp::Tanh,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => " + ",
            BinaryOp::Sub => " - ",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
            BinaryOp::Pow => 3,
        }
    }
}

/// A symbolic expression. Variables are 1-based: `Var(1)` is `u1`.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Arc<Expr>),
    Binary(BinaryOp, Arc<Expr>, Arc<Expr>),
}

impl Expr {
    pub fn constant(c: f64) -> Self {
        Expr::Const(c)
    }

    pub fn zero() -> Self {
        Expr::Const(0.0)
    }

    pub fn one() -> Self {
        Expr::Const(1.0)
    }

    /// The variable `u{index}`. Panics on index 0.
    pub fn var(index: usize) -> Self {
        assert!(index >= 1, "variables are 1-based");
        Expr::Var(index)
    }

    pub fn unary(op: UnaryOp, a: Expr) -> Self {
        Expr::Unary(op, Arc::new(a))
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Self {
        Expr::Binary(op, Arc::new(a), Arc::new(b))
    }

    pub fn pow(self, exponent: Expr) -> Self {
        Expr::binary(BinaryOp::Pow, self, exponent)
    }

    pub fn powi(self, exponent: i32) -> Self {
        self.pow(Expr::Const(exponent as f64))
    }

    pub fn sin(self) -> Self {
        Expr::unary(UnaryOp::Sin, self)
    }

    pub fn cos(self) -> Self {
        Expr::unary(UnaryOp::Cos, self)
    }

    pub fn exp(self) -> Self {
        Expr::unary(UnaryOp::Exp, self)
    }

    pub fn log(self) -> Self {
        Expr::unary(UnaryOp::Log, self)
    }

    pub fn sqrt(self) -> Self {
        Expr::unary(UnaryOp::Sqrt, self)
    }

    pub fn tanh(self) -> Self {
        Expr::unary(UnaryOp::Tanh, self)
    }

    /// Literal zero. Sound but incomplete: call on simplified expressions.
    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 1.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Syntactic zero after simplification.
    pub fn is_identically_zero(&self) -> bool {
        self.simplify().is_zero()
    }

    /// Whether `u{k}` occurs anywhere in the tree.
    pub fn depends_on(&self, k: usize) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(j) => *j == k,
            Expr::Unary(_, a) => a.depends_on(k),
            Expr::Binary(_, a, b) => a.depends_on(k) || b.depends_on(k),
        }
    }

    /// Largest variable index used, 0 for a constant expression.
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(j) => *j,
            Expr::Unary(_, a) => a.max_var(),
            Expr::Binary(_, a, b) => a.max_var().max(b.max_var()),
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) => 1 + a.size(),
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Replace `u{k}` by `with` everywhere.
    pub fn substitute(&self, k: usize, with: &Expr) -> Expr {
        match self {
            Expr::Var(j) if *j == k => with.clone(),
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, a) => Expr::unary(*op, a.substitute(k, with)),
            Expr::Binary(op, a, b) => {
                Expr::binary(*op, a.substitute(k, with), b.substitute(k, with))
            }
        }
    }

    /// Numeric zero test: `|e(p)| <= tol` at every point where `e` evaluates.
    /// Points with evaluation errors make the test fail.
    pub fn is_numerically_zero(&self, points: &[Vec<f64>], tol: f64) -> bool {
        points
            .iter()
            .all(|p| matches!(self.eval(p), Ok(v) if v.abs() <= tol))
    }

    fn is_atom(&self) -> bool {
        match self {
            Expr::Const(c) => !c.is_sign_negative(),
            Expr::Var(_) => true,
            Expr::Unary(op, _) => *op != UnaryOp::Neg,
            Expr::Binary(..) => false,
        }
    }
}

/// Exact partial derivative with an index bound check against the dimension.
pub fn differentiate(e: &Expr, k: usize, n: usize) -> Result<Expr, ParseError> {
    if k == 0 || k > n {
        return Err(ParseError::VarOutOfRange {
            pos: 0,
            index: k,
            n,
        });
    }
    Ok(e.derivative(k))
}

fn fmt_const(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let s = format!("{c:?}");
    match s.strip_suffix(".0") {
        Some(short) => f.write_str(short),
        None => f.write_str(&s),
    }
}

fn fmt_operand(e: &Expr, parent: BinaryOp, right: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let parens = match e {
        Expr::Binary(op, ..) => {
            let (p, q) = (op.precedence(), parent.precedence());
            if p != q {
                p < q
            } else if parent == BinaryOp::Pow {
                !right
            } else {
                right
            }
        }
        _ => !e.is_atom(),
    };
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => fmt_const(*c, f),
            Expr::Var(j) => write!(f, "u{j}"),
            Expr::Unary(UnaryOp::Neg, a) => {
                if a.is_atom() {
                    write!(f, "-{a}")
                } else {
                    write!(f, "-({a})")
                }
            }
            Expr::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Expr::Binary(op, a, b) => {
                fmt_operand(a, *op, false, f)?;
                f.write_str(op.symbol())?;
                fmt_operand(b, *op, true, f)
            }
        }
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl std::ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, self, rhs)
            }
        }

        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::binary($op, self.clone(), rhs.clone())
            }
        }

        impl std::ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::binary($op, self, Expr::Const(rhs))
            }
        }
    };
}

impl_binop!(Add, add, BinaryOp::Add);
impl_binop!(Sub, sub, BinaryOp::Sub);
impl_binop!(Mul, mul, BinaryOp::Mul);
impl_binop!(Div, div, BinaryOp::Div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::unary(UnaryOp::Neg, self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::unary(UnaryOp::Neg, self.clone())
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::Const(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse(s, 3).unwrap()
    }

    #[test]
    fn printing_keeps_structure() {
        for s in [
            "u1 + u2*u3",
            "(u1 + u2)*u3",
            "u1 - (u2 - u3)",
            "u1/(u2*u3)",
            "u1^u2^u3",
            "(u1^u2)^u3",
            "-u1",
            "-(u1 + u2)",
            "sin(u1*u2)",
            "u1*(-2)",
            "2.5e-7*u1",
        ] {
            let e = p(s);
            let printed = e.to_string();
            assert_eq!(parse(&printed, 3).unwrap(), e, "{s} -> {printed}");
        }
    }

    #[test]
    fn negative_literals_print_parenthesized_as_operands() {
        let e = Expr::var(1) * Expr::Const(-2.0);
        assert_eq!(e.to_string(), "u1*(-2)");
        assert_eq!((-Expr::var(1)).to_string(), "-u1");
    }

    #[test]
    fn depends_and_substitute() {
        let e = p("u1*sin(u3)");
        assert!(e.depends_on(1) && e.depends_on(3) && !e.depends_on(2));
        assert_eq!(e.max_var(), 3);
        let s = e.substitute(3, &Expr::var(2));
        assert_eq!(s, p("u1*sin(u2)"));
    }

    #[test]
    fn numeric_zero_predicate() {
        let e = p("sin(u1)^2 + cos(u1)^2 - 1");
        assert!(!e.simplify().is_zero());
        let pts: Vec<Vec<f64>> = (0..10).map(|k| vec![k as f64 * 0.3]).collect();
        assert!(e.is_numerically_zero(&pts, 1e-12));
        assert!(!p("u1").is_numerically_zero(&pts, 1e-12));
    }
}
