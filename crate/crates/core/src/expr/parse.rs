//! Recursive-descent parser for speed definitions.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' factor)?
//! base   := number | ident | '(' expr ')' | func '(' expr ')' | '-' base
//! func   := sin | cos | exp | log | sqrt | tanh
//! ident  := 'u' digits
//! ```

use thiserror::Error;

use super::{BinaryOp, Expr, UnaryOp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("variable index {index} out of range 1..={n} at position {pos}")]
    VarOutOfRange { pos: usize, index: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                // exponent only when digits follow, so `2e` stays a syntax error
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let s = &text[start..i];
                let v: f64 = s.parse().map_err(|_| ParseError::Syntax {
                    pos: start,
                    msg: format!("malformed number `{s}`"),
                })?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                return Err(ParseError::Syntax {
                    pos: start,
                    msg: format!(
                        "unexpected character `{}`",
                        text[start..].chars().next().unwrap_or('?')
                    ),
                })
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    n: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::Syntax {
                pos: self.pos(),
                msg: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Expr::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Minus => {
                // a literal directly after the sign becomes a negative constant
                if let Tok::Num(v) = *self.peek() {
                    self.bump();
                    return Ok(Expr::Const(-v));
                }
                Ok(Expr::unary(UnaryOp::Neg, self.base()?))
            }
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => self.ident(name, pos),
            Tok::End => Err(ParseError::Syntax {
                pos,
                msg: "unexpected end of input".into(),
            }),
            t => Err(ParseError::Syntax {
                pos,
                msg: format!("unexpected token {t:?}"),
            }),
        }
    }

    fn ident(&mut self, name: String, pos: usize) -> Result<Expr, ParseError> {
        if let Some(op) = UnaryOp::from_name(&name) {
            self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
            let arg = self.expr()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Expr::unary(op, arg));
        }
        let digits = name
            .strip_prefix('u')
            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()));
        match digits {
            Some(d) => {
                let index: usize = d.parse().map_err(|_| ParseError::UnknownIdentifier {
                    pos,
                    name: name.clone(),
                })?;
                if index == 0 || index > self.n {
                    return Err(ParseError::VarOutOfRange {
                        pos,
                        index,
                        n: self.n,
                    });
                }
                Ok(Expr::Var(index))
            }
            None => Err(ParseError::UnknownIdentifier { pos, name }),
        }
    }
}

/// Parse `text` as an expression over `u1..un`.
pub fn parse(text: &str, n: usize) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        n,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(ParseError::Syntax {
            pos: p.pos(),
            msg: "trailing input".into(),
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotient_of_variables() {
        let e = parse("u2/u1", 2).unwrap();
        assert_eq!(e, Expr::binary(BinaryOp::Div, Expr::Var(2), Expr::Var(1)));
    }

    #[test]
    fn function_of_product() {
        let e = parse("sin(u1*u2)", 2).unwrap();
        assert_eq!(e, (Expr::var(1) * Expr::var(2)).sin());
    }

    #[test]
    fn variable_out_of_range() {
        assert_eq!(
            parse("u3", 2),
            Err(ParseError::VarOutOfRange {
                pos: 0,
                index: 3,
                n: 2
            })
        );
        assert!(matches!(
            parse("u0", 2),
            Err(ParseError::VarOutOfRange { index: 0, .. })
        ));
    }

    #[test]
    fn unknown_identifiers_and_syntax_errors_carry_positions() {
        assert_eq!(
            parse("u1 + x", 2),
            Err(ParseError::UnknownIdentifier {
                pos: 5,
                name: "x".into()
            })
        );
        assert!(matches!(
            parse("u1 +", 2),
            Err(ParseError::Syntax { pos: 4, .. })
        ));
        assert!(matches!(
            parse("(u1", 2),
            Err(ParseError::Syntax { pos: 3, .. })
        ));
        assert!(matches!(parse("sin u1", 2), Err(ParseError::Syntax { .. })));
        assert!(matches!(
            parse("u1 u2", 2),
            Err(ParseError::Syntax { pos: 3, .. })
        ));
        assert!(matches!(
            parse("2e", 2),
            Err(ParseError::UnknownIdentifier { .. }) | Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse("u1 # 2", 2),
            Err(ParseError::Syntax { pos: 3, .. })
        ));
    }

    #[test]
    fn numbers_with_exponents() {
        assert_eq!(parse("1.5e-3", 1).unwrap(), Expr::Const(1.5e-3));
        assert_eq!(parse(".25", 1).unwrap(), Expr::Const(0.25));
        assert_eq!(parse("2E+2", 1).unwrap(), Expr::Const(200.0));
    }

    #[test]
    fn precedence_and_associativity() {
        // '-' base binds tighter than '^'
        assert_eq!(parse("-u1^2", 1).unwrap(), (-Expr::var(1)).powi(2));
        assert_eq!(
            parse("u1^2^3", 1).unwrap(),
            Expr::var(1).pow(Expr::Const(2.0).pow(Expr::Const(3.0)))
        );
        assert_eq!(
            parse("u1 - u1 - u1", 1).unwrap(),
            (Expr::var(1) - Expr::var(1)) - Expr::var(1)
        );
        assert_eq!(parse("-2", 1).unwrap(), Expr::Const(-2.0));
        assert_eq!(parse("-(2)", 1).unwrap(), -Expr::Const(2.0));
    }
}
