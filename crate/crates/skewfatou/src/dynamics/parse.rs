//! Parser for polynomial expressions in one variable `z` with exact
//! rational coefficients, e.g. `2*(z+1)^4 - 2` or `z^2 + 1/3`.

use rug::Rational;

use super::Polynomial;
use crate::error::{Error, Result};
use crate::numerics::exact::GaussianRational;
use crate::numerics::Scalar;

/// Parse an expression over `z` into its coefficient list.
pub fn parse_poly_expr(src: &str) -> Result<Polynomial<GaussianRational>> {
    let tokens = lex(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let poly = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(Error::Usage(format!(
            "unexpected trailing input in polynomial: {src:?}"
        )));
    }
    Ok(Polynomial::new(poly))
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Z,
    Plus,
    Minus,
    Star,
    Caret,
    Open,
    Close,
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            'z' | 'Z' => {
                out.push(Tok::Z);
                i += 1;
            }
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::Open);
                i += 1;
            }
            ')' => {
                out.push(Tok::Close);
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
                // a '/' directly between digits is a rational literal
                if i + 1 < bytes.len()
                    && bytes[i] as char == '/'
                    && (bytes[i + 1] as char).is_ascii_digit()
                {
                    i += 1;
                    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                }
                let text = &src[start..i];
                let q: Rational = text
                    .parse()
                    .map_err(|_| Error::Usage(format!("bad number {text:?}")))?;
                out.push(Tok::Num(q));
            }
            _ => {
                return Err(Error::Usage(format!(
                    "unexpected character {c:?} in polynomial"
                )))
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

type Coeffs = Vec<GaussianRational>;

fn add(a: &Coeffs, b: &Coeffs) -> Coeffs {
    let mut out = vec![GaussianRational::from_int(0); a.len().max(b.len())];
    for (i, c) in a.iter().enumerate() {
        out[i] = out[i].add(c);
    }
    for (i, c) in b.iter().enumerate() {
        out[i] = out[i].add(c);
    }
    out
}

fn mul(a: &Coeffs, b: &Coeffs) -> Coeffs {
    let mut out = vec![GaussianRational::from_int(0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].add(&x.mul(y));
        }
    }
    out
}

fn neg(a: &Coeffs) -> Coeffs {
    a.iter().map(|c| c.neg()).collect()
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Coeffs> {
        let mut acc = if self.eat(&Tok::Minus) {
            neg(&self.term()?)
        } else {
            self.term()?
        };
        loop {
            if self.eat(&Tok::Plus) {
                acc = add(&acc, &self.term()?);
            } else if self.eat(&Tok::Minus) {
                acc = add(&acc, &neg(&self.term()?));
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Coeffs> {
        let mut acc = self.power()?;
        loop {
            // explicit '*' or implicit adjacency like 2z or 2(z+1)
            if self.eat(&Tok::Star) {
                acc = mul(&acc, &self.power()?);
            } else if matches!(self.peek(), Some(Tok::Z | Tok::Open | Tok::Num(_))) {
                acc = mul(&acc, &self.power()?);
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<Coeffs> {
        let base = self.atom()?;
        if !self.eat(&Tok::Caret) {
            return Ok(base);
        }
        let e = match self.tokens.get(self.pos) {
            Some(Tok::Num(q)) if q.is_integer() && *q >= 0 => {
                self.pos += 1;
                q.numer().to_u32().ok_or_else(|| {
                    Error::Usage("exponent too large".to_string())
                })?
            }
            _ => return Err(Error::Usage("expected nonnegative integer exponent".to_string())),
        };
        let mut acc = vec![GaussianRational::from_int(1)];
        for _ in 0..e {
            acc = mul(&acc, &base);
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<Coeffs> {
        match self.tokens.get(self.pos).cloned() {
            Some(Tok::Num(q)) => {
                self.pos += 1;
                Ok(vec![GaussianRational::real(q)])
            }
            Some(Tok::Z) => {
                self.pos += 1;
                Ok(vec![
                    GaussianRational::from_int(0),
                    GaussianRational::from_int(1),
                ])
            }
            Some(Tok::Open) => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(&Tok::Close) {
                    return Err(Error::Usage("missing closing parenthesis".to_string()));
                }
                Ok(inner)
            }
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(neg(&self.atom()?))
            }
            other => Err(Error::Usage(format!("unexpected token {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::test_maps::qr;

    #[test]
    fn example_family_fiber_polynomial() {
        let p = parse_poly_expr("2*(z+1)^4-2").unwrap();
        assert_eq!(p.degree(), 4);
        // 2(z+1)^4 - 2 = 8z + 12z^2 + 8z^3 + 2z^4
        let expect = [qr(0, 1), qr(8, 1), qr(12, 1), qr(8, 1), qr(2, 1)];
        for (k, e) in expect.iter().enumerate() {
            assert!(p.coeff(k).unwrap().sub(e).is_zero(), "coeff {k}");
        }
    }

    #[test]
    fn rationals_implicit_products_and_unary_minus() {
        let p = parse_poly_expr("-z^2 + 1/3 z - 2/7").unwrap();
        assert!(p.coeff(2).unwrap().sub(&qr(-1, 1)).is_zero());
        assert!(p.coeff(1).unwrap().sub(&qr(1, 3)).is_zero());
        assert!(p.coeff(0).unwrap().sub(&qr(-2, 7)).is_zero());
    }

    #[test]
    fn evaluation_matches_formula() {
        let p = parse_poly_expr("2*(z+1)^4-2").unwrap();
        let v = p.eval(&qr(-2, 1));
        assert!(v.sub(&qr(0, 1)).is_zero());
        let w = p.eval(&qr(1, 1));
        assert!(w.sub(&qr(30, 1)).is_zero());
    }

    #[test]
    fn garbage_rejected() {
        assert!(parse_poly_expr("z^").is_err());
        assert!(parse_poly_expr("(z+1").is_err());
        assert!(parse_poly_expr("q+1").is_err());
        assert!(parse_poly_expr("z^(1/2)").is_err());
    }
}
