//! Sparse multivariate polynomials over `f64`.
//!
//! Terms are kept in a `BTreeMap` keyed by [`ExponentVec`], whose ordering is
//! graded lexicographic: lower total degree first, and within one degree the
//! exponent with the larger power of the first variable comes first. This is
//! the order `1, Y1, Y2, Y1^2, Y1*Y2, Y2^2, ...` used for every monomial basis
//! in the crate. When a homogenizing variable `Y0` is present it is variable
//! zero, so it is the most significant one.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LsippError, Result};

/// Coefficients smaller than this in magnitude are dropped after arithmetic.
pub const ZERO_TOL: f64 = 1e-14;

/// Exponent vector `(α_1, .., α_n)` of a monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExponentVec(pub Vec<u32>);

impl ExponentVec {
    pub fn zero(nvars: usize) -> Self {
        ExponentVec(vec![0; nvars])
    }

    /// Unit exponent for variable `var`.
    pub fn unit(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        ExponentVec(e)
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &ExponentVec) -> ExponentVec {
        debug_assert_eq!(self.nvars(), other.nvars());
        ExponentVec(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `y^α`.
    pub fn eval(&self, y: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(y)
            .map(|(&a, &v)| if a == 0 { 1.0 } else { v.powi(a as i32) })
            .product()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

impl Ord for ExponentVec {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for ExponentVec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<Vec<u32>> for ExponentVec {
    fn from(v: Vec<u32>) -> Self {
        ExponentVec(v)
    }
}

/// A polynomial in `nvars` variables with real coefficients, stored in
/// canonical form (no zero coefficients).
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<ExponentVec, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::monomial(nvars, ExponentVec::zero(nvars), c)
    }

    /// The polynomial `Y_{var+1}` (variables are zero-based here).
    pub fn var(nvars: usize, var: usize) -> Self {
        Self::monomial(nvars, ExponentVec::unit(nvars, var), 1.0)
    }

    pub fn monomial(nvars: usize, exp: ExponentVec, coef: f64) -> Self {
        assert_eq!(exp.nvars(), nvars, "exponent length must equal nvars");
        let mut p = Polynomial::zero(nvars);
        if coef.abs() >= ZERO_TOL {
            p.terms.insert(exp, coef);
        }
        p
    }

    /// Builds a polynomial from `(exponent, coefficient)` pairs, summing
    /// repeated exponents.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ExponentVec, f64)>,
    {
        let mut p = Polynomial::zero(nvars);
        for (e, c) in terms {
            if e.nvars() != nvars {
                return Err(LsippError::DimensionMismatch {
                    expected: nvars,
                    found: e.nvars(),
                });
            }
            if !c.is_finite() {
                return Err(LsippError::InvalidInput(format!(
                    "non-finite coefficient {c}"
                )));
            }
            *p.terms.entry(e).or_insert(0.0) += c;
        }
        p.canonicalize();
        Ok(p)
    }

    fn canonicalize(&mut self) {
        self.terms.retain(|_, c| c.abs() >= ZERO_TOL);
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial reports 0 (check [`is_zero`](Self::is_zero)).
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(ExponentVec::degree).max().unwrap_or(0)
    }

    /// `⌈deg / 2⌉`.
    pub fn half_degree(&self) -> u32 {
        self.degree().div_ceil(2)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExponentVec, f64)> {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exp: &ExponentVec) -> f64 {
        self.terms.get(exp).copied().unwrap_or(0.0)
    }

    fn check_same(&self, other: &Polynomial) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(LsippError::DimensionMismatch {
                expected: self.nvars,
                found: other.nvars,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            *out.terms.entry(e.clone()).or_insert(0.0) += c;
        }
        out.canonicalize();
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_same(other)?;
        let mut out = Polynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                *out.terms.entry(ea.add(eb)).or_insert(0.0) += ca * cb;
            }
        }
        out.canonicalize();
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        };
        out.canonicalize();
        out
    }

    pub fn pow(&self, exp: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.nvars, 1.0);
        for _ in 0..exp {
            out = out.mul(self).expect("same nvars");
        }
        out
    }

    pub fn evaluate(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.nvars {
            return Err(LsippError::DimensionMismatch {
                expected: self.nvars,
                found: y.len(),
            });
        }
        Ok(self.terms.iter().map(|(e, c)| c * e.eval(y)).sum())
    }

    /// Homogenizes to `target_degree` with a new leading variable `Y0`:
    /// returns `Y0^target * p(Y / Y0)` in `nvars + 1` variables.
    pub fn homogenize(&self, target_degree: u32) -> Result<Polynomial> {
        if target_degree < self.degree() {
            return Err(LsippError::DegreeTooLow {
                needed: self.degree(),
                given: target_degree,
            });
        }
        let terms = self.terms.iter().map(|(e, &c)| {
            let mut v = Vec::with_capacity(self.nvars + 1);
            v.push(target_degree - e.degree());
            v.extend_from_slice(&e.0);
            (ExponentVec(v), c)
        });
        Polynomial::from_terms(self.nvars + 1, terms)
    }

    /// Homogeneous part of degree `deg p`.
    pub fn top_form(&self) -> Result<Polynomial> {
        if self.is_zero() {
            return Err(LsippError::InvalidInput(
                "top form of the zero polynomial needs an explicit grade".into(),
            ));
        }
        Ok(self.graded_part(self.degree()))
    }

    /// Sum of the terms of total degree exactly `grade` (possibly zero).
    pub fn graded_part(&self, grade: u32) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.degree() == grade)
                .map(|(e, &c)| (e.clone(), c))
                .collect(),
        }
    }

    /// Substitutes `value` for variable `var` and drops that variable.
    pub fn restrict(&self, var: usize, value: f64) -> Polynomial {
        assert!(var < self.nvars);
        let terms = self.terms.iter().map(|(e, &c)| {
            let mut v = e.0.clone();
            let p = v.remove(var);
            let f = if p == 0 { 1.0 } else { value.powi(p as i32) };
            (ExponentVec(v), c * f)
        });
        Polynomial::from_terms(self.nvars - 1, terms).expect("consistent nvars")
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `Σ_i Y_i^2`.
    pub fn squared_norm(nvars: usize) -> Polynomial {
        let terms = (0..nvars).map(|i| {
            let mut e = ExponentVec::zero(nvars);
            e.0[i] = 2;
            (e, 1.0)
        });
        Polynomial::from_terms(nvars, terms).expect("consistent nvars")
    }

    /// Parses strings such as `"3*Y1^2*Y2 - 1/2*Y3 + 4"`.
    ///
    /// Variables are `Y1..Yn` (and `Y0` when `first_var_is_zero` is set, in
    /// which case `Y0` maps to variable index 0).
    pub fn parse(s: &str, nvars: usize) -> Result<Polynomial> {
        parse::parse_polynomial(s, nvars, false)
    }

    /// Like [`parse`](Self::parse) but the variables are `Y0..Y{n-1}`.
    pub fn parse_homogeneous(s: &str, nvars: usize) -> Result<Polynomial> {
        parse::parse_polynomial(s, nvars, true)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        // highest degree first reads more naturally
        for (i, (e, c)) in self.terms.iter().rev().enumerate() {
            let (sign, mag) = if *c < 0.0 { ("-", -c) } else { ("+", *c) };
            if i == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let vars: Vec<String> = e
                .0
                .iter()
                .enumerate()
                .filter(|(_, &a)| a > 0)
                .map(|(v, &a)| {
                    if a == 1 {
                        format!("Y{}", v + 1)
                    } else {
                        format!("Y{}^{}", v + 1, a)
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if (mag - 1.0).abs() == 0.0 {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{mag}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Parses a decimal or rational (`"p/q"`) literal to the nearest double.
pub fn parse_scalar(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || LsippError::Parse(format!("invalid number `{s}`"));
    if let Some((num, den)) = s.split_once('/') {
        let n: f64 = num.trim().parse().map_err(|_| bad())?;
        let d: f64 = den.trim().parse().map_err(|_| bad())?;
        if d == 0.0 {
            return Err(bad());
        }
        Ok(n / d)
    } else {
        s.parse().map_err(|_| bad())
    }
}

mod parse {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    enum Tok {
        Num(f64),
        Var(usize),
        Plus,
        Minus,
        Star,
        Slash,
        Caret,
        LParen,
        RParen,
    }

    fn lex(s: &str, nvars: usize, zero_based: bool) -> Result<Vec<Tok>> {
        let chars: Vec<char> = s.chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let ch = chars[i];
            match ch {
                ' ' | '\t' | '\n' => i += 1,
                '+' => {
                    out.push(Tok::Plus);
                    i += 1
                }
                '-' => {
                    out.push(Tok::Minus);
                    i += 1
                }
                '*' => {
                    out.push(Tok::Star);
                    i += 1
                }
                '/' => {
                    out.push(Tok::Slash);
                    i += 1
                }
                '^' => {
                    out.push(Tok::Caret);
                    i += 1
                }
                '(' => {
                    out.push(Tok::LParen);
                    i += 1
                }
                ')' => {
                    out.push(Tok::RParen);
                    i += 1
                }
                'Y' | 'y' => {
                    let start = i + 1;
                    let mut j = start;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    let idx: usize = chars[start..j]
                        .iter()
                        .collect::<String>()
                        .parse()
                        .map_err(|_| LsippError::Parse(format!("bad variable at {i} in `{s}`")))?;
                    let var = if zero_based {
                        idx
                    } else {
                        idx.checked_sub(1).ok_or_else(|| {
                            LsippError::Parse(format!("variables start at Y1 in `{s}`"))
                        })?
                    };
                    if var >= nvars {
                        return Err(LsippError::Parse(format!(
                            "variable Y{idx} out of range for {nvars} variables"
                        )));
                    }
                    out.push(Tok::Var(var));
                    i = j;
                }
                c if c.is_ascii_digit() || c == '.' => {
                    let start = i;
                    while i < chars.len()
                        && (chars[i].is_ascii_digit()
                            || chars[i] == '.'
                            || ((chars[i] == 'e' || chars[i] == 'E')
                                && i + 1 < chars.len()
                                && (chars[i + 1].is_ascii_digit()
                                    || chars[i + 1] == '-'
                                    || chars[i + 1] == '+'))
                            || ((chars[i] == '-' || chars[i] == '+')
                                && (chars[i - 1] == 'e' || chars[i - 1] == 'E')))
                    {
                        i += 1;
                    }
                    let lit: String = chars[start..i].iter().collect();
                    let v: f64 = lit
                        .parse()
                        .map_err(|_| LsippError::Parse(format!("invalid number `{lit}`")))?;
                    out.push(Tok::Num(v));
                }
                other => {
                    return Err(LsippError::Parse(format!(
                        "unexpected character `{other}` in `{s}`"
                    )))
                }
            }
        }
        Ok(out)
    }

    struct Parser {
        toks: Vec<Tok>,
        pos: usize,
        nvars: usize,
    }

    impl Parser {
        fn peek(&self) -> Option<&Tok> {
            self.toks.get(self.pos)
        }

        fn next(&mut self) -> Option<Tok> {
            let t = self.toks.get(self.pos).cloned();
            self.pos += 1;
            t
        }

        // expr := ['+'|'-'] term (('+'|'-') term)*
        fn expr(&mut self) -> Result<Polynomial> {
            let mut acc = Polynomial::zero(self.nvars);
            let mut sign = 1.0;
            match self.peek() {
                Some(Tok::Minus) => {
                    sign = -1.0;
                    self.pos += 1;
                }
                Some(Tok::Plus) => self.pos += 1,
                _ => {}
            }
            loop {
                let t = self.term()?;
                acc = acc.add(&t.scale(sign))?;
                match self.peek() {
                    Some(Tok::Plus) => {
                        sign = 1.0;
                        self.pos += 1;
                    }
                    Some(Tok::Minus) => {
                        sign = -1.0;
                        self.pos += 1;
                    }
                    _ => return Ok(acc),
                }
            }
        }

        // term := factor (('*'|'/') factor)*
        fn term(&mut self) -> Result<Polynomial> {
            let mut acc = self.factor()?;
            loop {
                match self.peek() {
                    Some(Tok::Star) => {
                        self.pos += 1;
                        let f = self.factor()?;
                        acc = acc.mul(&f)?;
                    }
                    Some(Tok::Slash) => {
                        self.pos += 1;
                        let f = self.factor()?;
                        if f.degree() > 0 || f.is_zero() {
                            return Err(LsippError::Parse(
                                "division only by nonzero constants".into(),
                            ));
                        }
                        let c = f.coeff(&ExponentVec::zero(self.nvars));
                        acc = acc.scale(1.0 / c);
                    }
                    _ => return Ok(acc),
                }
            }
        }

        // factor := atom ('^' integer)?
        fn factor(&mut self) -> Result<Polynomial> {
            let base = self.atom()?;
            if let Some(Tok::Caret) = self.peek() {
                self.pos += 1;
                match self.next() {
                    Some(Tok::Num(v)) if v >= 0.0 && v.fract() == 0.0 => Ok(base.pow(v as u32)),
                    other => Err(LsippError::Parse(format!(
                        "expected nonnegative integer exponent, found {other:?}"
                    ))),
                }
            } else {
                Ok(base)
            }
        }

        fn atom(&mut self) -> Result<Polynomial> {
            match self.next() {
                Some(Tok::Num(v)) => Ok(Polynomial::constant(self.nvars, v)),
                Some(Tok::Var(i)) => Ok(Polynomial::var(self.nvars, i)),
                Some(Tok::LParen) => {
                    let e = self.expr()?;
                    match self.next() {
                        Some(Tok::RParen) => Ok(e),
                        _ => Err(LsippError::Parse("missing `)`".into())),
                    }
                }
                Some(Tok::Minus) => Ok(self.atom()?.scale(-1.0)),
                other => Err(LsippError::Parse(format!("unexpected token {other:?}"))),
            }
        }
    }

    pub(super) fn parse_polynomial(s: &str, nvars: usize, zero_based: bool) -> Result<Polynomial> {
        let toks = lex(s, nvars, zero_based)?;
        if toks.is_empty() {
            return Err(LsippError::Parse("empty polynomial".into()));
        }
        let mut p = Parser {
            toks,
            pos: 0,
            nvars,
        };
        let out = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(LsippError::Parse(format!(
                "trailing input in `{s}` at token {}",
                p.pos
            )));
        }
        Ok(out)
    }
}
