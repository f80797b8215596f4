//! Text format for polynomial maps.
//!
//! ```text
//! map       := component (';' component)*
//! component := sign? term (sign term)*
//! term      := factor ('*' factor)*
//! factor    := integer | variable ('^' integer)?
//! variable  := 'n' | 'x' digits
//! ```

use num_bigint::BigInt;
use num_traits::{One, Pow};

use super::{IntPolynomialMap, Monomial};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Int(BigInt),
    Var(usize),
    Plus,
    Minus,
    Star,
    Caret,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            'n' => {
                out.push(Token::Var(0));
                i += 1;
            }
            'x' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j == start {
                    return Err(Error::Parse(format!("variable `x` at offset {i} needs an index, as in x0")));
                }
                let idx: String = chars[start..j].iter().collect();
                out.push(Token::Var(idx.parse().map_err(|_| Error::Parse(format!("bad variable index `{idx}`")))?));
                i = j;
            }
            d if d.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == '.' || chars[j] == '/') {
                    return Err(Error::Parse("coefficients must be integers".into()));
                }
                let s: String = chars[i..j].iter().collect();
                out.push(Token::Int(s.parse().expect("digits parse")));
                i = j;
            }
            '.' | '/' => return Err(Error::Parse("coefficients must be integers".into())),
            other => return Err(Error::Parse(format!("unexpected character `{other}` at offset {i}"))),
        }
    }
    Ok(out)
}

/// One term as (coefficient, exponent per variable index).
type Term = (BigInt, Vec<u32>);

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn component(&mut self) -> Result<Vec<Term>> {
        let mut terms = Vec::new();
        let mut sign = match self.peek() {
            Some(Token::Minus) => {
                self.pos += 1;
                -1
            }
            Some(Token::Plus) => {
                self.pos += 1;
                1
            }
            _ => 1,
        };
        loop {
            let (c, e) = self.term()?;
            terms.push((c * sign, e));
            match self.next() {
                None => break,
                Some(Token::Plus) => sign = 1,
                Some(Token::Minus) => sign = -1,
                Some(t) => return Err(Error::Parse(format!("unexpected {t:?} between terms"))),
            }
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<Term> {
        let mut coeff = BigInt::one();
        let mut exps: Vec<u32> = Vec::new();
        loop {
            match self.next() {
                Some(Token::Int(v)) => {
                    let e = self.exponent()?;
                    coeff *= Pow::pow(&v, e);
                }
                Some(Token::Var(j)) => {
                    let e = self.exponent()?;
                    if exps.len() <= j {
                        exps.resize(j + 1, 0);
                    }
                    exps[j] = exps[j].checked_add(e).ok_or_else(|| Error::Parse("exponent overflow".into()))?;
                }
                Some(t) => return Err(Error::Parse(format!("expected a number or variable, found {t:?}"))),
                None => return Err(Error::Parse("expression ends where a term was expected".into())),
            }
            if self.peek() == Some(&Token::Star) {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok((coeff, exps))
    }

    fn exponent(&mut self) -> Result<u32> {
        if self.peek() != Some(&Token::Caret) {
            return Ok(1);
        }
        self.pos += 1;
        match self.next() {
            Some(Token::Int(v)) => u32::try_from(&v).map_err(|_| Error::Parse(format!("exponent {v} too large"))),
            _ => Err(Error::Parse("`^` must be followed by a nonnegative integer".into())),
        }
    }
}

pub(super) fn parse(text: &str, arity: Option<usize>) -> Result<IntPolynomialMap> {
    let mut components = Vec::new();
    for (i, part) in text.split(';').enumerate() {
        let tokens = tokenize(part)?;
        if tokens.is_empty() {
            return Err(Error::Parse(format!("component {i} is empty")));
        }
        let mut parser = Parser { tokens, pos: 0 };
        components.push(parser.component()?);
    }
    let used = components.iter().flatten().map(|(_, e)| e.len()).max().unwrap_or(0);
    let arity = match arity {
        Some(a) if a < used => {
            return Err(Error::Parse(format!("variable x{} used but arity is {a}", used - 1)));
        }
        Some(a) => a,
        None => used.max(1),
    };
    let comps = components
        .into_iter()
        .map(|terms| {
            terms
                .into_iter()
                .map(|(c, mut e)| {
                    e.resize(arity, 0);
                    (Monomial(e), c)
                })
                .collect()
        })
        .collect();
    IntPolynomialMap::new(arity, comps)
}
