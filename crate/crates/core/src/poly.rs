//! Sparse multivariate polynomials: representation, arithmetic,
//! differentiation, evaluation and a small text format.
//!
//! Text format (ASCII, whitespace between tokens is ignored):
//!
//! ```text
//! poly  := [sign] term { sign term }      sign := '+' | '-'
//! term  := coeff [ '*' monos ] | monos
//! monos := mono { '*' mono }
//! mono  := 'x' INT [ '^' INT ]
//! coeff := decimal literal, optionally "a/b"
//! ```
//!
//! Variables are `x1 … xn`; internally they are positional.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::scalar::Coefficient;

/// Exponent vector `α ∈ N₀ⁿ` of a monomial `X^α`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zeros(nvars: usize) -> Self {
        MultiIndex(vec![0; nvars])
    }

    /// The exponent of `X_i` alone.
    pub fn unit(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    /// Total degree `|α|`.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// `α + β`. Both indices must share the same arity.
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.nvars(), other.nvars());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Graded order used for printing and for the monomial basis:
    /// lower total degree first, then `X1`-major lexicographic
    /// (`x1^2` before `x1*x2` before `x2^2`).
    pub fn graded_cmp(&self, other: &MultiIndex) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, e)?;
            }
        }
        Ok(())
    }
}

/// Dimensions of the graded polynomial spaces `R[X]_k` and `R[X]_{=k}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PolySpace {
    pub nvars: usize,
    pub degree: usize,
}

impl PolySpace {
    pub fn new(nvars: usize, degree: usize) -> Self {
        PolySpace { nvars, degree }
    }

    /// `s_k = C(n + k, n)`, the number of monomials of degree at most `k`.
    pub fn s(&self) -> Option<usize> {
        binomial(self.nvars + self.degree, self.nvars)
    }

    /// `r_k = C(n + k - 1, n - 1)`, the number of monomials of degree exactly `k`.
    pub fn r(&self) -> Option<usize> {
        if self.nvars == 0 {
            return Some(usize::from(self.degree == 0));
        }
        binomial(self.nvars + self.degree - 1, self.nvars - 1)
    }
}

/// Overflow-checked binomial coefficient.
pub fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("number of variables differ: {left} vs {right}")]
    NvarsMismatch { left: usize, right: usize },
    #[error("point has dimension {got}, polynomial has {expected} variables")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Sparse polynomial `Σ_α p_α X^α` with no stored zero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<C> {
    nvars: usize,
    terms: BTreeMap<MultiIndex, C>,
}

impl<C: Coefficient> Polynomial<C> {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        Self::monomial(MultiIndex::zeros(nvars), c)
    }

    pub fn monomial(alpha: MultiIndex, c: C) -> Self {
        let mut p = Self::zero(alpha.nvars());
        p.add_term(alpha, c);
        p
    }

    /// The polynomial `X_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::unit(nvars, i), C::one())
    }

    /// Builds a polynomial from `(α, coefficient)` pairs, merging repeated monomials.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, C)>,
    {
        let mut p = Self::zero(nvars);
        for (alpha, c) in terms {
            assert_eq!(alpha.nvars(), nvars, "multi-index arity");
            p.add_term(alpha, c);
        }
        p
    }

    fn add_term(&mut self, alpha: MultiIndex, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&alpha) {
            Some(old) => {
                let sum = old + c;
                if !sum.is_zero() {
                    self.terms.insert(alpha, sum);
                }
            }
            None => {
                self.terms.insert(alpha, c);
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> C {
        self.terms.get(alpha).cloned().unwrap_or_else(C::zero)
    }

    fn check_nvars(&self, other: &Self) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::NvarsMismatch {
                left: self.nvars,
                right: other.nvars,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_nvars(other)?;
        let mut out = self.clone();
        for (alpha, c) in &other.terms {
            out.add_term(alpha.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(C::zero() - C::one())
    }

    pub fn scale(&self, c: C) -> Self {
        Self::from_terms(
            self.nvars,
            self.terms
                .iter()
                .map(|(a, v)| (a.clone(), v.clone() * c.clone())),
        )
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_nvars(other)?;
        let mut out = Self::zero(self.nvars);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.add(b), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    /// `∂p/∂X_var`.
    pub fn derivative(&self, var: usize) -> Self {
        let terms = self.terms.iter().filter_map(|(alpha, c)| {
            let e = alpha.0[var];
            if e == 0 {
                return None;
            }
            let mut beta = alpha.clone();
            beta.0[var] -= 1;
            Some((beta, c.clone() * C::from_count(e)))
        });
        Self::from_terms(self.nvars, terms)
    }

    /// `(∂p/∂X_1, …, ∂p/∂X_n)`.
    pub fn gradient(&self) -> Vec<Self> {
        (0..self.nvars).map(|i| self.derivative(i)).collect()
    }

    /// Evaluates `p` at `point`, accumulating each term's power product.
    pub fn evaluate(&self, point: &[C]) -> Result<C, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::DimensionMismatch {
                expected: self.nvars,
                got: point.len(),
            });
        }
        let deg = self.degree() as usize;
        // powers[i][e] = point[i]^e
        let powers: Vec<Vec<C>> = point
            .iter()
            .map(|x| {
                let mut row = Vec::with_capacity(deg + 1);
                row.push(C::one());
                for e in 1..=deg {
                    let next = row[e - 1].clone() * x.clone();
                    row.push(next);
                }
                row
            })
            .collect();
        let mut acc = C::zero();
        for (alpha, c) in &self.terms {
            let mut term = c.clone();
            for (i, &e) in alpha.0.iter().enumerate() {
                if e > 0 {
                    term = term * powers[i][e as usize].clone();
                }
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    /// Coefficients of `q(x) = p(s·x)`, i.e. `p_α s^{|α|}`.
    pub fn rescaled(&self, s: C) -> Self {
        let terms = self.terms.iter().map(|(alpha, c)| {
            let mut f = C::one();
            for _ in 0..alpha.degree() {
                f = f * s.clone();
            }
            (alpha.clone(), c.clone() * f)
        });
        Self::from_terms(self.nvars, terms)
    }

    /// Terms in printing order: highest degree first, `X1`-major within a degree.
    pub fn sorted_terms(&self) -> Vec<(&MultiIndex, &C)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| {
            b.0.degree()
                .cmp(&a.0.degree())
                .then_with(|| a.0.graded_cmp(b.0))
        });
        v
    }
}

impl<C> fmt::Display for Polynomial<C>
where
    C: Coefficient + fmt::Display + PartialOrd,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (alpha, c)) in self.sorted_terms().into_iter().enumerate() {
            let negative = *c < C::zero();
            let mag = if negative { C::zero() - c.clone() } else { c.clone() };
            match (k, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if alpha.is_zero() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{alpha}")?;
            } else {
                write!(f, "{mag}*{alpha}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("variable index 0 at byte {pos}; variables are numbered from x1")]
    ZeroVariableIndex { pos: usize },
    #[error("non-integer exponent at byte {pos}")]
    NonIntegerExponent { pos: usize },
    #[error("negative exponent at byte {pos}")]
    NegativeExponent { pos: usize },
    #[error("variable x{index} at byte {pos} exceeds declared nvars = {nvars}")]
    VariableOutOfRange { pos: usize, index: usize, nvars: usize },
    #[error("invalid coefficient {text:?} at byte {pos}")]
    BadCoefficient { pos: usize, text: String },
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    /// Unsigned decimal literal with optional fraction and exponent.
    fn number_text(&mut self) -> Result<(usize, &'a str), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let int = self.digits().len();
        let mut frac = 0;
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            frac = self.digits().len();
        }
        if int + frac == 0 {
            self.pos = start;
            return self.syntax("expected a number");
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.digits().is_empty() {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        Ok((start, text))
    }

    fn coefficient<C: Coefficient + FromStr>(&mut self) -> Result<C, ParseError> {
        let (pos, text) = self.number_text()?;
        let num = text.parse::<C>().map_err(|_| ParseError::BadCoefficient {
            pos,
            text: text.to_string(),
        })?;
        if self.peek() == Some(b'/') {
            self.pos += 1;
            let (dpos, dtext) = self.number_text()?;
            let den = dtext.parse::<C>().map_err(|_| ParseError::BadCoefficient {
                pos: dpos,
                text: dtext.to_string(),
            })?;
            if den.is_zero() {
                return Err(ParseError::BadCoefficient {
                    pos: dpos,
                    text: dtext.to_string(),
                });
            }
            return Ok(num / den);
        }
        Ok(num)
    }

    /// `'x' INT [ '^' INT ]`, returning (variable index from 1, exponent).
    fn mono(&mut self) -> Result<(usize, usize, u32), ParseError> {
        if self.peek() != Some(b'x') {
            return self.syntax("expected a variable x<i>");
        }
        let vpos = self.pos;
        self.pos += 1;
        let idx_text = self.digits();
        if idx_text.is_empty() {
            return self.syntax("expected a variable index after 'x'");
        }
        let index: usize = idx_text.parse().map_err(|_| ParseError::Syntax {
            pos: vpos,
            msg: "variable index too large".into(),
        })?;
        if index == 0 {
            return Err(ParseError::ZeroVariableIndex { pos: vpos });
        }
        let mut exp = 1;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let epos = {
                self.skip_ws();
                self.pos
            };
            if self.src.get(self.pos) == Some(&b'-') {
                return Err(ParseError::NegativeExponent { pos: epos });
            }
            let e_text = self.digits();
            if e_text.is_empty() {
                if self.src.get(self.pos) == Some(&b'.') {
                    return Err(ParseError::NonIntegerExponent { pos: epos });
                }
                return self.syntax("expected an integer exponent after '^'");
            }
            if self.src.get(self.pos) == Some(&b'.') {
                return Err(ParseError::NonIntegerExponent { pos: epos });
            }
            exp = e_text.parse().map_err(|_| ParseError::Syntax {
                pos: epos,
                msg: "exponent too large".into(),
            })?;
        }
        Ok((vpos, index, exp))
    }
}

/// Parses the text format into a polynomial.
///
/// If `nvars` is `None` the arity is the largest variable subscript that
/// appears (1 for constant input).
pub fn parse_polynomial<C>(text: &str, nvars: Option<usize>) -> Result<Polynomial<C>, ParseError>
where
    C: Coefficient + FromStr,
{
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    // (sign, coefficient, [(pos, var, exp)])
    let mut raw: Vec<(bool, C, Vec<(usize, usize, u32)>)> = Vec::new();
    let mut first = true;
    loop {
        let mut negative = false;
        match p.peek() {
            None if first => return p.syntax("empty input"),
            None => break,
            Some(b'+') => p.pos += 1,
            Some(b'-') => {
                p.pos += 1;
                negative = true;
            }
            Some(_) if first => {}
            Some(_) => return p.syntax("expected '+' or '-' between terms"),
        }
        first = false;
        let mut monos = Vec::new();
        let coeff = match p.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let c = p.coefficient::<C>()?;
                if p.peek() == Some(b'*') {
                    p.pos += 1;
                    monos.push(p.mono()?);
                }
                c
            }
            Some(b'x') => {
                monos.push(p.mono()?);
                C::one()
            }
            Some(_) => return p.syntax("expected a coefficient or a variable"),
            None => return p.syntax("expected a term"),
        };
        while p.peek() == Some(b'*') {
            p.pos += 1;
            monos.push(p.mono()?);
        }
        raw.push((negative, coeff, monos));
    }

    let inferred = raw
        .iter()
        .flat_map(|(_, _, m)| m.iter().map(|&(_, v, _)| v))
        .max()
        .unwrap_or(1);
    let n = match nvars {
        Some(n) => {
            for (_, _, monos) in &raw {
                if let Some(&(pos, index, _)) = monos.iter().find(|&&(_, v, _)| v > n) {
                    return Err(ParseError::VariableOutOfRange { pos, index, nvars: n });
                }
            }
            n
        }
        None => inferred,
    };
    let terms = raw.into_iter().map(|(negative, c, monos)| {
        let mut e = vec![0u32; n];
        for (_, v, k) in monos {
            e[v - 1] += k;
        }
        let c = if negative { C::zero() - c } else { c };
        (MultiIndex(e), c)
    });
    Ok(Polynomial::from_terms(n, terms))
}

impl<C: Coefficient + FromStr> FromStr for Polynomial<C> {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_polynomial(s, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MOTZKIN: &str = "x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1";

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    #[test]
    fn parses_motzkin() {
        let p: Polynomial<f64> = parse_polynomial(MOTZKIN, None).unwrap();
        assert_eq!(p.nvars(), 2);
        assert_eq!(p.len(), 4);
        assert_eq!(p.degree(), 6);
        assert_eq!(p.coefficient(&mi(&[2, 2])), -3.0);
        assert_eq!(p.coefficient(&mi(&[0, 0])), 1.0);
    }

    #[test]
    fn parses_zero() {
        let p: Polynomial<f64> = "0".parse().unwrap();
        assert!(p.is_zero());
        assert_eq!(p.degree(), 0);
    }

    #[test]
    fn parentheses_are_rejected_and_expanded_form_parses() {
        let err = parse_polynomial::<f64>("x1^2*x2^2*(x1^2+x2^2-1)", None).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { pos: 10, .. }), "{err:?}");
        let p: Polynomial<f64> =
            parse_polynomial("x1^4*x2^2 + x1^2*x2^4 - x1^2*x2^2", None).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.degree(), 6);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_polynomial::<f64>("x0^2", None),
            Err(ParseError::ZeroVariableIndex { pos: 0 })
        ));
        assert!(matches!(
            parse_polynomial::<f64>("x1^2.5", None),
            Err(ParseError::NonIntegerExponent { .. })
        ));
        assert!(matches!(
            parse_polynomial::<f64>("x1^-2", None),
            Err(ParseError::NegativeExponent { .. })
        ));
        assert!(matches!(
            parse_polynomial::<f64>("2x1", None),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_polynomial::<f64>("x3", Some(2)),
            Err(ParseError::VariableOutOfRange { index: 3, nvars: 2, .. })
        ));
        assert!(matches!(
            parse_polynomial::<f64>("", None),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_polynomial::<f64>("x1 x2", None),
            Err(ParseError::Syntax { .. })
        ));
    }

    #[test]
    fn fractions_and_signs() {
        let p: Polynomial<f64> = parse_polynomial("-1/4*x1 + 2.5e1 - x1*x1", None).unwrap();
        assert_eq!(p.coefficient(&mi(&[1])), -0.25);
        assert_eq!(p.coefficient(&mi(&[0])), 25.0);
        assert_eq!(p.coefficient(&mi(&[2])), -1.0);
    }

    #[test]
    fn printing_round_trips() {
        let p: Polynomial<f64> = parse_polynomial(MOTZKIN, None).unwrap();
        assert_eq!(p.to_string(), MOTZKIN);
        let q: Polynomial<f64> = parse_polynomial(&p.to_string(), None).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn evaluates_motzkin() {
        let p: Polynomial<f64> = parse_polynomial(MOTZKIN, None).unwrap();
        assert_eq!(p.evaluate(&[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(p.evaluate(&[0.0, 0.0]).unwrap(), 1.0);
        // cross-check of the reported upper bound at (1.0109, 1.0109)
        let v = p.evaluate(&[1.0109, 1.0109]).unwrap();
        assert!((v - 0.00156).abs() < 5e-4, "{v}");
        assert!(matches!(
            p.evaluate(&[1.0]),
            Err(PolyError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn motzkin_gradient_is_symbolic_derivative() {
        let p: Polynomial<f64> = parse_polynomial(MOTZKIN, None).unwrap();
        let g = p.gradient();
        let expected: Polynomial<f64> =
            parse_polynomial("4*x1^3*x2^2 + 2*x1*x2^4 - 6*x1*x2^2", Some(2)).unwrap();
        assert_eq!(g[0], expected);
        assert!(g.iter().all(|gi| gi.degree() <= 5));
    }

    #[test]
    fn gradient_of_constant_and_quadratic() {
        let c = Polynomial::constant(3, 7.0);
        assert!(c.gradient().iter().all(Polynomial::is_zero));
        let q: Polynomial<f64> = parse_polynomial("x1^2 + x2^2", None).unwrap();
        let a = 1.0 / 3f64.sqrt();
        let g: Vec<f64> = q
            .gradient()
            .iter()
            .map(|gi| gi.evaluate(&[a, a]).unwrap())
            .collect();
        assert!((g[0] - 2.0 * a).abs() < 1e-15 && (g[1] - 2.0 * a).abs() < 1e-15);
    }

    #[test]
    fn arithmetic() {
        let p: Polynomial<f64> = parse_polynomial(MOTZKIN, None).unwrap();
        assert!(p.add(&p.scale(-1.0)).unwrap().is_zero());
        let x1 = Polynomial::<f64>::var(2, 0);
        let x2 = Polynomial::<f64>::var(2, 1);
        let prod = x1.mul(&x2).unwrap();
        assert_eq!(prod.degree(), 2);
        assert_eq!(prod.coefficient(&mi(&[1, 1])), 1.0);
        assert_eq!(p.mul(&Polynomial::constant(2, 1.0)).unwrap(), p);
        assert!(matches!(
            p.add(&Polynomial::zero(3)),
            Err(PolyError::NvarsMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn exact_rational_coefficients() {
        use num_rational::Rational64;
        let p: Polynomial<Rational64> = parse_polynomial("1/3*x1^3 - 1/2*x1", None).unwrap();
        let d = p.derivative(0);
        assert_eq!(d.coefficient(&mi(&[2])), Rational64::new(1, 1));
        assert_eq!(d.coefficient(&mi(&[0])), Rational64::new(-1, 2));
        let v = p.evaluate(&[Rational64::new(3, 1)]).unwrap();
        assert_eq!(v, Rational64::new(15, 2));
    }

    #[test]
    fn single_precision_parsing() {
        let p: Polynomial<f32> = parse_polynomial(MOTZKIN, None).unwrap();
        assert_eq!(p.evaluate(&[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn poly_space_dimensions() {
        assert_eq!(PolySpace::new(2, 3).s(), Some(10));
        assert_eq!(PolySpace::new(3, 2).s(), Some(10));
        assert_eq!(PolySpace::new(2, 6).s(), Some(28));
        assert_eq!(PolySpace::new(2, 3).r(), Some(4));
        assert_eq!(PolySpace::new(1, 0).s(), Some(1));
        for n in 1..6 {
            for k in 1..10 {
                let s = PolySpace::new(n, k).s().unwrap();
                let s1 = PolySpace::new(n, k - 1).s().unwrap();
                assert_eq!(s, s1 + PolySpace::new(n, k).r().unwrap());
            }
        }
    }
}
