use super::{BinaryOp, Expr, UnaryOp};

impl Expr {
    /// Exact partial derivative with respect to `u{k}`, simplified.
    ///
    /// Product, quotient and power rules specialise when one operand is free of
    /// `u{k}`, so `d/du2 (u2/u1)` comes out as `1/u1` rather than a quotient
    /// rule expansion.
    pub fn derivative(&self, k: usize) -> Expr {
        assert!(k >= 1, "variables are 1-based");
        raw(self, k).simplify()
    }
}

fn raw(e: &Expr, k: usize) -> Expr {
    if !e.depends_on(k) {
        return Expr::zero();
    }
    match e {
        Expr::Const(_) => Expr::zero(),
        Expr::Var(j) => Expr::Const(if *j == k { 1.0 } else { 0.0 }),
        Expr::Unary(op, a) => {
            let a = a.as_ref();
            let da = raw(a, k);
            match op {
                UnaryOp::Neg => -da,
                UnaryOp::Sin => da * a.clone().cos(),
                UnaryOp::Cos => -(da * a.clone().sin()),
                UnaryOp::Exp => da * a.clone().exp(),
                UnaryOp::Log => da / a.clone(),
                UnaryOp::Sqrt => da / (Expr::Const(2.0) * a.clone().sqrt()),
                UnaryOp::Tanh => da * (Expr::one() - a.clone().tanh().powi(2)),
            }
        }
        Expr::Binary(op, a, b) => {
            let (a, b) = (a.as_ref(), b.as_ref());
            let (ha, hb) = (a.depends_on(k), b.depends_on(k));
            match op {
                BinaryOp::Add => raw(a, k) + raw(b, k),
                BinaryOp::Sub => raw(a, k) - raw(b, k),
                BinaryOp::Mul => match (ha, hb) {
                    (true, false) => raw(a, k) * b.clone(),
                    (false, true) => a.clone() * raw(b, k),
                    _ => raw(a, k) * b.clone() + a.clone() * raw(b, k),
                },
                BinaryOp::Div => match (ha, hb) {
                    (true, false) => raw(a, k) / b.clone(),
                    (false, true) => -((a.clone() * raw(b, k)) / b.clone().powi(2)),
                    _ => (raw(a, k) * b.clone() - a.clone() * raw(b, k)) / b.clone().powi(2),
                },
                BinaryOp::Pow => match (ha, hb) {
                    (true, false) => b.clone() * a.clone().pow(b.clone() - Expr::one()) * raw(a, k),
                    (false, true) => a.clone().pow(b.clone()) * a.clone().log() * raw(b, k),
                    _ => {
                        a.clone().pow(b.clone())
                            * (raw(b, k) * a.clone().log() + b.clone() * raw(a, k) / a.clone())
                    }
                },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{differentiate, parse};

    fn d(s: &str, k: usize) -> String {
        parse(s, 3).unwrap().derivative(k).to_string()
    }

    #[test]
    fn quotient_in_numerator_variable() {
        assert_eq!(
            parse("u2/u1", 2).unwrap().derivative(2),
            parse("1/u1", 2).unwrap()
        );
    }

    #[test]
    fn chain_rule_puts_inner_derivative_first() {
        assert_eq!(
            parse("sin(u1*u2)", 2).unwrap().derivative(1),
            parse("u2*cos(u1*u2)", 2).unwrap()
        );
    }

    #[test]
    fn central_difference_oracle_at_fixed_point() {
        let e = parse("sin(u1*u2)", 2).unwrap();
        let de = e.derivative(1);
        let p = [1.3, 0.7];
        let h = 1e-5;
        let fd =
            (e.eval(&[p[0] + h, p[1]]).unwrap() - e.eval(&[p[0] - h, p[1]]).unwrap()) / (2.0 * h);
        let exact = de.eval(&p).unwrap();
        assert!(
            (exact - fd).abs() <= 1e-7 * (1.0 + exact.abs()),
            "{exact} vs {fd}"
        );
    }

    #[test]
    fn independent_variable_gives_literal_zero() {
        assert_eq!(d("u1*u2 + exp(u2)", 3), "0");
        assert_eq!(d("5", 1), "0");
    }

    #[test]
    fn elementary_functions() {
        assert_eq!(d("log(u1)", 1), "1/u1");
        assert_eq!(d("exp(2*u1)", 1), "2*exp(2*u1)");
        assert_eq!(d("u1^3", 1), "3*u1^2");
        assert_eq!(d("cos(u1)", 1), "-sin(u1)");
    }

    #[test]
    fn index_bound_is_checked() {
        let e = parse("u1", 2).unwrap();
        assert!(differentiate(&e, 3, 2).is_err());
        assert!(differentiate(&e, 0, 2).is_err());
        assert!(differentiate(&e, 2, 2).unwrap().is_zero());
    }
}
