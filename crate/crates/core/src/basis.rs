//! Monomial candidate functions `q^a * qd^b` and the term-expression grammar
//!
//! ```text
//! library := term (',' term)*
//! term    := factor ('*' factor)*
//! factor  := ('q' | 'qd') ('^' uint)?
//! ```
//!
//! Whitespace is insignificant and repeated factors add their exponents.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::signal::TimeSeries;

/// Largest exponent accepted on either factor.
pub const MAX_EXPONENT: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisTerm {
    q_exp: u32,
    qd_exp: u32,
}

impl BasisTerm {
    /// Returns `None` for the constant term, which no model may contain, and
    /// for exponents above [`MAX_EXPONENT`].
    pub fn new(q_exp: u32, qd_exp: u32) -> Option<Self> {
        let valid = (q_exp > 0 || qd_exp > 0) && q_exp <= MAX_EXPONENT && qd_exp <= MAX_EXPONENT;
        valid.then_some(Self { q_exp, qd_exp })
    }

    pub fn q_exp(&self) -> u32 {
        self.q_exp
    }

    pub fn qd_exp(&self) -> u32 {
        self.qd_exp
    }

    pub fn is_stiffness(&self) -> bool {
        self.qd_exp == 0
    }

    #[inline]
    pub fn eval(&self, q: f64, qd: f64) -> f64 {
        powu(q, self.q_exp) * powu(qd, self.qd_exp)
    }

    /// Pointwise `q(t)^a * qd(t)^b`.
    pub fn eval_series(&self, q: &TimeSeries, qd: &TimeSeries) -> Result<TimeSeries> {
        q.zip_with(qd, |a, b| self.eval(a, b))
    }
}

#[inline]
fn powu(x: f64, n: u32) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        2 => x * x,
        3 => x * x * x,
        _ => x.powi(n as i32),
    }
}

impl fmt::Display for BasisTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let factor = |f: &mut fmt::Formatter<'_>, name: &str, e: u32| match e {
            1 => write!(f, "{name}"),
            _ => write!(f, "{name}^{e}"),
        };
        match (self.q_exp, self.qd_exp) {
            (0, b) => factor(f, "qd", b),
            (a, 0) => factor(f, "q", a),
            (a, b) => {
                factor(f, "q", a)?;
                f.write_str("*")?;
                factor(f, "qd", b)
            }
        }
    }
}

/// Ordered set of distinct terms; coefficient vectors follow this order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BasisLibrary {
    terms: Vec<BasisTerm>,
}

impl BasisLibrary {
    pub fn new(terms: Vec<BasisTerm>) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            if terms[..i].contains(t) {
                return Err(Error::DuplicateTerm(t.to_string()));
            }
        }
        Ok(Self { terms })
    }

    /// `q, q^2, ..., q^degree`.
    pub fn polynomial(degree: u32) -> Self {
        Self {
            terms: (1..=degree).map(|n| BasisTerm { q_exp: n, qd_exp: 0 }).collect(),
        }
    }

    pub fn terms(&self) -> &[BasisTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn position(&self, term: &BasisTerm) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    pub fn is_stiffness_only(&self) -> bool {
        self.terms.iter().all(BasisTerm::is_stiffness)
    }

    pub fn ensure_stiffness_only(&self) -> Result<()> {
        match self.terms.iter().find(|t| !t.is_stiffness()) {
            Some(t) => Err(Error::NotStiffnessTerm(t.to_string())),
            None => Ok(()),
        }
    }

    /// Library without the terms at the given indices.
    pub fn without(&self, drop: &[usize]) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .enumerate()
                .filter(|(i, _)| !drop.contains(i))
                .map(|(_, t)| *t)
                .collect(),
        }
    }

    /// Evaluates `sum_j coeffs[j] * term_j(q, qd)` at one state.
    pub fn eval_sum(&self, coeffs: &[f64], q: f64, qd: f64) -> f64 {
        self.terms.iter().zip(coeffs).map(|(t, c)| c * t.eval(q, qd)).sum()
    }

    /// Canonical text form; parses back to an identical library.
    pub fn render(&self) -> String {
        self.terms.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for BasisLibrary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl FromStr for BasisLibrary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_terms(s)
    }
}

/// Pointwise evaluation of one term on a shared grid.
pub fn eval_term(term: &BasisTerm, q: &TimeSeries, qd: &TimeSeries) -> Result<TimeSeries> {
    term.eval_series(q, qd)
}

/// Parses a comma-separated list of monomial terms.
pub fn parse_terms(expr: &str) -> Result<BasisLibrary> {
    let mut p = Parser { src: expr.as_bytes(), pos: 0 };
    let mut terms = Vec::new();
    loop {
        let start = p.skip_ws();
        let term = p.term()?;
        let term = BasisTerm::new(term.0, term.1).ok_or_else(|| Error::Parse {
            offset: start,
            expected: "a term with total exponent of at least 1".into(),
        })?;
        if terms.contains(&term) {
            return Err(Error::DuplicateTerm(term.to_string()));
        }
        terms.push(term);
        p.skip_ws();
        match p.peek() {
            None => break,
            Some(b',') => p.pos += 1,
            Some(_) => return Err(p.expected("',', '*' or end of input")),
        }
    }
    Ok(BasisLibrary { terms })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) -> usize {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
        self.pos
    }

    fn expected(&self, what: &str) -> Error {
        Error::Parse {
            offset: self.pos,
            expected: what.to_string(),
        }
    }

    fn term(&mut self) -> Result<(u32, u32)> {
        let (mut a, mut b) = (0u32, 0u32);
        loop {
            self.skip_ws();
            let (is_qd, e) = self.factor()?;
            let slot = if is_qd { &mut b } else { &mut a };
            *slot += e;
            if *slot > MAX_EXPONENT {
                return Err(self.expected("a total exponent of at most 64"));
            }
            self.skip_ws();
            if self.peek() == Some(b'*') {
                self.pos += 1;
            } else {
                return Ok((a, b));
            }
        }
    }

    fn factor(&mut self) -> Result<(bool, u32)> {
        if self.peek() != Some(b'q') {
            return Err(self.expected("'q' or 'qd'"));
        }
        self.pos += 1;
        let is_qd = self.peek() == Some(b'd');
        if is_qd {
            self.pos += 1;
        }
        if self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_') {
            return Err(self.expected("'q' or 'qd'"));
        }
        self.skip_ws();
        if self.peek() != Some(b'^') {
            return Ok((is_qd, 1));
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.expected("an unsigned integer exponent"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let e = digits
            .parse::<u32>()
            .ok()
            .filter(|&e| e <= MAX_EXPONENT)
            .ok_or_else(|| Error::Parse {
                offset: start,
                expected: "an exponent of at most 64".into(),
            })?;
        Ok((is_qd, e))
    }
}
