//! Recursive-descent parser for scalar symbol expressions.
//!
//! Grammar:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' integer)?
//! atom    := number | 'i' | 't' | 'lambda' | 'xi' | 'absxi' | 'sgn' | 'rho'
//!          | 'e(' int ')' | 'cos(' int ')' | 'sin(' int ')'
//!          | 'chi(' number ',' number ')' | '(' sum ')'
//! ```
//!
//! `e(k)`, `cos(k)`, `sin(k)` stand for `e^{ikx}`, `cos(kx)`, `sin(kx)`.
//! Division is only allowed by constant subexpressions.

use crate::error::{Error, Result};
use crate::linalg::{C64, I};

use super::expr::Expr;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, usize)>> {
        let mut lx = Lexer { src, toks: Vec::new() };
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let ch = bytes[i] as char;
            if ch.is_whitespace() {
                i += 1;
            } else if ch.is_ascii_digit() || ch == '.' {
                let start = i;
                while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    // exponent only when followed by digit or sign+digit
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &lx.src[start..i];
                let v: f64 = text.parse().map_err(|_| perr(start, format!("bad number `{text}`")))?;
                lx.toks.push((Tok::Num(v), start));
            } else if ch.is_ascii_alphabetic() || ch == '_' {
                let start = i;
                while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                lx.toks.push((Tok::Ident(lx.src[start..i].to_string()), start));
            } else if "+-*/^(),".contains(ch) {
                lx.toks.push((Tok::Op(ch), i));
                i += 1;
            } else {
                return Err(perr(i, format!("unexpected character `{ch}`")));
            }
        }
        Ok(lx.toks)
    }
}

fn perr(col: usize, message: String) -> Error {
    Error::Parse { location: format!("column {}", col + 1), message }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|(_, c)| *c).unwrap_or(self.len)
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.peek() {
            Some(Tok::Op(o)) if *o == c => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(perr(self.col(), format!("expected `{c}`"))),
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut acc = self.product()?;
        loop {
            match self.peek() {
                Some(Tok::Op('+')) => {
                    self.pos += 1;
                    acc = acc.add(self.product()?);
                }
                Some(Tok::Op('-')) => {
                    self.pos += 1;
                    acc = acc.add(self.product()?.neg());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Op('*')) => {
                    self.pos += 1;
                    acc = acc.mul(self.unary()?);
                }
                Some(Tok::Op('/')) => {
                    let col = self.col();
                    self.pos += 1;
                    match self.unary()? {
                        Expr::Const(z) if z.norm() > 0.0 => acc = acc.mul(Expr::Const(1.0 / z)),
                        _ => return Err(perr(col, "division only by nonzero constants".into())),
                    }
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(self.unary()?.neg());
        }
        if let Some(Tok::Op('+')) = self.peek() {
            self.pos += 1;
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let col = self.col();
            match self.peek().cloned() {
                Some(Tok::Num(v)) if v >= 0.0 && v.fract() == 0.0 && v <= 64.0 => {
                    self.pos += 1;
                    return Ok(base.pow(v as u32));
                }
                _ => return Err(perr(col, "exponent must be a small nonnegative integer".into())),
            }
        }
        Ok(base)
    }

    fn int_arg(&mut self) -> Result<i32> {
        self.expect('(')?;
        let neg = if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            true
        } else {
            false
        };
        let col = self.col();
        let v = match self.peek().cloned() {
            Some(Tok::Num(v)) if v.fract() == 0.0 => {
                self.pos += 1;
                v as i32
            }
            _ => return Err(perr(col, "expected integer frequency".into())),
        };
        self.expect(')')?;
        Ok(if neg { -v } else { v })
    }

    fn num_arg(&mut self) -> Result<f64> {
        let neg = if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            true
        } else {
            false
        };
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(if neg { -v } else { v })
            }
            _ => Err(perr(col, "expected number".into())),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let col = self.col();
        let tok = self.peek().cloned().ok_or_else(|| perr(col, "unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::real(v)),
            Tok::Op('(') => {
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "i" => Ok(Expr::Const(I)),
                "t" => Ok(Expr::T),
                "lambda" | "l" => Ok(Expr::Lambda),
                "xi" => Ok(Expr::Xi),
                "absxi" => Ok(Expr::AbsXi),
                "sgn" => Ok(Expr::Sgn),
                "rho" => Ok(Expr::Rho),
                "e" => Ok(Expr::Fourier(self.int_arg()?)),
                "cos" => Ok(Expr::Cos(self.int_arg()?)),
                "sin" => Ok(Expr::Sin(self.int_arg()?)),
                "chi" | "chir" => {
                    self.expect('(')?;
                    let a = self.num_arg()?;
                    self.expect(',')?;
                    let b = self.num_arg()?;
                    self.expect(')')?;
                    if !(a < b) {
                        return Err(perr(col, "cutoff needs a < b".into()));
                    }
                    Ok(Expr::Cutoff { a, b, reflected: name == "chir" })
                }
                other => Err(perr(col, format!("unknown identifier `{other}`"))),
            },
            Tok::Op(o) => Err(perr(col, format!("unexpected `{o}`"))),
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr> {
    let toks = Lexer::run(src)?;
    let mut p = Parser { toks, pos: 0, len: src.len() };
    let e = p.sum()?;
    if p.pos != p.toks.len() {
        return Err(perr(p.col(), "trailing input".into()));
    }
    Ok(e)
}

/// Parse a complex constant such as `1`, `-2.5`, `i`, `0.5 - 2*i`.
pub fn parse_constant(src: &str) -> Result<C64> {
    let e = parse_expr(src)?;
    match e {
        Expr::Const(z) => Ok(z),
        _ => Err(perr(0, format!("`{src}` is not a constant"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::expr::SymbolPoint;

    fn at(e: &Expr, xi: f64, lambda: C64) -> C64 {
        e.eval(&SymbolPoint::new(0.0, 0.0, xi, lambda))
    }

    #[test]
    fn parses_quadratic_and_linear() {
        let e = parse_expr("lambda^2 + xi^2").unwrap();
        assert!(at(&e, 1.0, I).norm() < 1e-15);
        let e = parse_expr("lambda + i*absxi").unwrap();
        assert!((at(&e, -1.0, C64::new(0.0, 0.0)) - I).norm() < 1e-15);
    }

    #[test]
    fn constants_fold() {
        assert_eq!(parse_constant("0.5 - 2*i").unwrap(), C64::new(0.5, -2.0));
        assert_eq!(parse_constant("1/4").unwrap(), C64::new(0.25, 0.0));
        assert_eq!(parse_constant("2e-1").unwrap(), C64::new(0.2, 0.0));
    }

    #[test]
    fn errors_carry_location() {
        match parse_expr("lambda + $") {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "column 10"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_expr("xi / lambda").is_err());
        assert!(parse_expr("e(x)").is_err());
    }

    #[test]
    fn fourier_atoms() {
        let e = parse_expr("e(2) + cos(1)").unwrap();
        assert_eq!(e.bandwidth(), 2);
        let v = e.eval(&SymbolPoint::new(std::f64::consts::PI, 0.0, 0.0, C64::new(0.0, 0.0)));
        assert!((v - C64::new(0.0, 0.0)).norm() < 1e-12);
    }
}
