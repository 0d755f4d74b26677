use thiserror::Error;

use super::{BinaryOp, Expr, UnaryOp};

/// Point-evaluation failure. `expr` is the printed offending subexpression.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero in `{expr}`")]
    DivisionByZero { expr: String },
    #[error("log of non-positive value {value} in `{expr}`")]
    LogDomain { expr: String, value: f64 },
    #[error("sqrt of negative value {value} in `{expr}`")]
    SqrtDomain { expr: String, value: f64 },
    #[error("power {base}^{exponent} undefined in `{expr}`")]
    PowDomain {
        expr: String,
        base: f64,
        exponent: f64,
    },
    #[error("non-finite value in `{expr}`")]
    NonFinite { expr: String },
    #[error("point has {len} coordinates but `u{index}` was referenced")]
    MissingCoordinate { index: usize, len: usize },
}

impl Expr {
    /// Evaluate at `point`, where `point[k-1]` is the value of `u{k}`.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(c) => return Ok(*c),
            Expr::Var(k) => {
                return point
                    .get(k - 1)
                    .copied()
                    .ok_or(EvalError::MissingCoordinate {
                        index: *k,
                        len: point.len(),
                    })
            }
            Expr::Unary(op, a) => {
                let x = a.eval(point)?;
                match op {
                    UnaryOp::Neg => -x,
                    UnaryOp::Sin => x.sin(),
                    UnaryOp::Cos => x.cos(),
                    UnaryOp::Exp => x.exp(),
                    UnaryOp::Tanh => x.tanh(),
                    UnaryOp::Log => {
                        if x <= 0.0 {
                            return Err(EvalError::LogDomain {
                                expr: self.to_string(),
                                value: x,
                            });
                        }
                        x.ln()
                    }
                    UnaryOp::Sqrt => {
                        if x < 0.0 {
                            return Err(EvalError::SqrtDomain {
                                expr: self.to_string(),
                                value: x,
                            });
                        }
                        x.sqrt()
                    }
                }
            }
            Expr::Binary(op, a, b) => {
                let x = a.eval(point)?;
                let y = b.eval(point)?;
                match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => {
                        if y == 0.0 {
                            return Err(EvalError::DivisionByZero {
                                expr: self.to_string(),
                            });
                        }
                        x / y
                    }
                    BinaryOp::Pow => pow(x, y).ok_or_else(|| EvalError::PowDomain {
                        expr: self.to_string(),
                        base: x,
                        exponent: y,
                    })?,
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite {
                expr: self.to_string(),
            })
        }
    }
}

/// Real power: negative bases need integer exponents, zero needs a nonnegative one.
fn pow(base: f64, exponent: f64) -> Option<f64> {
    if base == 0.0 && exponent < 0.0 {
        return None;
    }
    if base < 0.0 && exponent.fract() != 0.0 {
        return None;
    }
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        return Some(base.powi(exponent as i32));
    }
    Some(base.powf(exponent))
}
