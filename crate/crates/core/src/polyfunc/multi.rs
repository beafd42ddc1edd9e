//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Terms are kept in a `BTreeMap` keyed by exponent vectors ordered
//! graded-lexicographically, so iteration order (and therefore printing and
//! JSON output) is canonical.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::PolyError;

/// Exponent vector of a monomial; `[2, 1]` is `x1^2*x2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Exponent(Vec<u32>);

impl Exponent {
    pub fn new(exps: Vec<u32>) -> Self {
        Exponent(exps)
    }

    pub fn constant(num_vars: usize) -> Self {
        Exponent(vec![0; num_vars])
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn mul(&self, other: &Exponent) -> Exponent {
        Exponent(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Exponent {
    // graded lexicographic: total degree first, then x1 most significant
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A polynomial in `num_vars` real variables `x1..xm`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiPolynomial {
    num_vars: usize,
    terms: BTreeMap<Exponent, BigRational>,
}

impl MultiPolynomial {
    pub fn zero(num_vars: usize) -> Self {
        MultiPolynomial {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: BigRational) -> Self {
        let mut p = Self::zero(num_vars);
        p.add_term(Exponent::constant(num_vars), c);
        p
    }

    /// The coordinate polynomial `x_{var+1}` (zero-based `var`).
    pub fn variable(num_vars: usize, var: usize) -> Result<Self, PolyError> {
        if var >= num_vars {
            return Err(PolyError::VariableOutOfRange {
                index: var + 1,
                num_vars,
            });
        }
        let mut exps = vec![0; num_vars];
        exps[var] = 1;
        let mut p = Self::zero(num_vars);
        p.add_term(Exponent(exps), BigRational::one());
        Ok(p)
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, summing
    /// repeated monomials and dropping zero coefficients.
    pub fn from_terms<I>(num_vars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u32>, BigRational)>,
    {
        let mut p = Self::zero(num_vars);
        for (exps, c) in terms {
            if exps.len() != num_vars {
                return Err(PolyError::DimensionMismatch {
                    expected: num_vars,
                    found: exps.len(),
                });
            }
            p.add_term(Exponent(exps), c);
        }
        Ok(p)
    }

    /// Like [`from_terms`](Self::from_terms) with `f64` coefficients, each
    /// converted to the rational it denotes exactly.
    pub fn from_f64_terms<I>(num_vars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut exact = Vec::new();
        for (exps, c) in terms {
            exact.push((exps, rational_from_f64(c)?));
        }
        Self::from_terms(num_vars, exact)
    }

    fn add_term(&mut self, exp: Exponent, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exp) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree, `-1` for the zero polynomial.
    pub fn degree(&self) -> i64 {
        self.terms
            .keys()
            .map(|e| e.total_degree() as i64)
            .max()
            .unwrap_or(-1)
    }

    /// Terms in ascending graded-lexicographic order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Exponent, &BigRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exps: &[u32]) -> BigRational {
        self.terms
            .get(&Exponent(exps.to_vec()))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn coefficient_f64(&self, exps: &[u32]) -> f64 {
        rational_to_f64(&self.coefficient(exps))
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut out = Self::zero(self.num_vars);
        if c.is_zero() {
            return out;
        }
        for (e, a) in &self.terms {
            out.terms.insert(e.clone(), a * c);
        }
        out
    }

    /// Exact partial derivative with respect to the zero-based variable `var`.
    pub fn differentiate(&self, var: usize) -> Result<Self, PolyError> {
        if var >= self.num_vars {
            return Err(PolyError::VariableOutOfRange {
                index: var + 1,
                num_vars: self.num_vars,
            });
        }
        let mut out = Self::zero(self.num_vars);
        for (e, c) in &self.terms {
            let k = e.0[var];
            if k == 0 {
                continue;
            }
            let mut exps = e.0.clone();
            exps[var] = k - 1;
            out.add_term(
                Exponent(exps),
                c * BigRational::from_integer(BigInt::from(k)),
            );
        }
        Ok(out)
    }

    /// Value at `x` as a plain sum of `c * prod x_j^a_j` in `f64`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64, PolyError> {
        self.compile().evaluate(x)
    }

    /// Floating-point snapshot used for repeated evaluation.
    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            num_vars: self.num_vars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.0.iter().map(|&a| a as i32).collect(), rational_to_f64(c)))
                .collect(),
        }
    }

    pub fn to_json(&self) -> PolyJson {
        PolyJson {
            m: self.num_vars,
            terms: self
                .terms
                .iter()
                .rev()
                .map(|(e, c)| TermJson {
                    exp: e.0.clone(),
                    coef: rational_to_f64(c),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &PolyJson) -> Result<Self, PolyError> {
        Self::from_f64_terms(json.m, json.terms.iter().map(|t| (t.exp.clone(), t.coef)))
    }

    fn check_same_vars(&self, other: &Self) {
        assert_eq!(
            self.num_vars, other.num_vars,
            "polynomials over different variable counts"
        );
    }
}

impl Add for &MultiPolynomial {
    type Output = MultiPolynomial;
    fn add(self, rhs: &MultiPolynomial) -> MultiPolynomial {
        self.check_same_vars(rhs);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &MultiPolynomial {
    type Output = MultiPolynomial;
    fn sub(self, rhs: &MultiPolynomial) -> MultiPolynomial {
        self + &(-rhs)
    }
}

impl Neg for &MultiPolynomial {
    type Output = MultiPolynomial;
    fn neg(self) -> MultiPolynomial {
        MultiPolynomial {
            num_vars: self.num_vars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }
}

impl Mul for &MultiPolynomial {
    type Output = MultiPolynomial;
    fn mul(self, rhs: &MultiPolynomial) -> MultiPolynomial {
        self.check_same_vars(rhs);
        let mut out = MultiPolynomial::zero(self.num_vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                out.add_term(ea.mul(eb), ca * cb);
            }
        }
        out
    }
}

/// `f64` copy of a polynomial's terms, in the same canonical order.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    num_vars: usize,
    terms: Vec<(Vec<i32>, f64)>,
}

impl CompiledPoly {
    pub fn evaluate(&self, x: &[f64]) -> Result<f64, PolyError> {
        if x.len() != self.num_vars {
            return Err(PolyError::DimensionMismatch {
                expected: self.num_vars,
                found: x.len(),
            });
        }
        Ok(self.evaluate_unchecked(x))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for (exps, c) in &self.terms {
            let mut t = *c;
            for (xi, &a) in x.iter().zip(exps) {
                if a != 0 {
                    t *= xi.powi(a);
                }
            }
            sum += t;
        }
        sum
    }
}

/// JSON wire form: `{"m": 2, "terms": [{"exp": [1, 0], "coef": 5.0}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyJson {
    pub m: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub exp: Vec<u32>,
    pub coef: f64,
}

pub fn rational_from_f64(x: f64) -> Result<BigRational, PolyError> {
    BigRational::from_float(x).ok_or(PolyError::NonFinite(x))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

// ---------------------------------------------------------------------------
// Text form
// ---------------------------------------------------------------------------

impl fmt::Display for MultiPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (e, c)) in self.terms.iter().rev().enumerate() {
            let negative = c.is_negative();
            match (i, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let abs = c.abs();
            let mut wrote = false;
            if !abs.is_one() || e.is_constant() {
                f.write_str(&format_rational(&abs))?;
                wrote = true;
            }
            for (j, &a) in e.0.iter().enumerate() {
                if a == 0 {
                    continue;
                }
                if wrote {
                    f.write_str("*")?;
                }
                write!(f, "x{}", j + 1)?;
                if a > 1 {
                    write!(f, "^{a}")?;
                }
                wrote = true;
            }
        }
        Ok(())
    }
}

/// Non-negative rational as an exact decimal when it terminates, else `p/q`.
fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let den = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut rest, mut twos, mut fives) = (den.clone(), 0u32, 0u32);
    while (&rest % &two).is_zero() {
        rest /= &two;
        twos += 1;
    }
    while (&rest % &five).is_zero() {
        rest /= &five;
        fives += 1;
    }
    if !rest.is_one() {
        return format!("{}/{}", r.numer(), den);
    }
    let k = twos.max(fives) as usize;
    let scaled = r.numer() * (num_traits::pow(BigInt::from(10), k) / den);
    let digits = scaled.to_string();
    let digits = if digits.len() <= k {
        format!("{}{}", "0".repeat(k + 1 - digits.len()), digits)
    } else {
        digits
    };
    let (int_part, frac_part) = digits.split_at(digits.len() - k);
    format!("{int_part}.{frac_part}")
}

/// Parses `c * x1^a * x2^b ... + ...` over `num_vars` variables.
///
/// Coefficients may be integers, decimals (optionally with an `e` exponent)
/// or `p/q` fractions; all are read exactly.
pub fn parse_polynomial(text: &str, num_vars: usize) -> Result<MultiPolynomial, PolyError> {
    Parser {
        src: text.as_bytes(),
        pos: 0,
        num_vars,
    }
    .parse()
}

impl std::str::FromStr for MultiPolynomial {
    type Err = PolyError;

    /// Parses with the variable count inferred from the largest `x` index.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let m = max_variable_index(s).max(1);
        parse_polynomial(s, m)
    }
}

/// Largest `k` such that `xk` appears in `text`, 0 if none.
pub fn max_variable_index(text: &str) -> usize {
    let bytes = text.as_bytes();
    let mut best = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'x' {
            let start = i + 1;
            let mut j = start;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            if j > start {
                if let Ok(k) = text[start..j].parse::<usize>() {
                    best = best.max(k);
                }
            }
            i = j.max(i + 1);
        } else {
            i += 1;
        }
    }
    best
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    num_vars: usize,
}

impl Parser<'_> {
    fn parse(mut self) -> Result<MultiPolynomial, PolyError> {
        let mut poly = MultiPolynomial::zero(self.num_vars);
        self.skip_ws();
        if self.at_end() {
            return Err(self.error("empty polynomial"));
        }
        let mut first = true;
        loop {
            self.skip_ws();
            let mut negative = false;
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                }
                Some(b'-') => {
                    self.pos += 1;
                    negative = true;
                }
                _ if first => {}
                _ => return Err(self.error("expected '+' or '-'")),
            }
            first = false;
            self.skip_ws();
            let (exp, mut c) = self.term()?;
            if negative {
                c = -c;
            }
            poly.add_term(exp, c);
            self.skip_ws();
            if self.at_end() {
                return Ok(poly);
            }
        }
    }

    fn term(&mut self) -> Result<(Exponent, BigRational), PolyError> {
        let mut exps = vec![0u32; self.num_vars];
        let mut coef = BigRational::one();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'x') => {
                    let (var, power) = self.variable()?;
                    exps[var] += power;
                }
                Some(c) if c.is_ascii_digit() || c == b'.' => {
                    coef *= self.number()?;
                }
                Some(b'(') => {
                    self.pos += 1;
                    self.skip_ws();
                    let neg = self.peek() == Some(b'-');
                    if neg {
                        self.pos += 1;
                    }
                    let n = self.number()?;
                    self.skip_ws();
                    if self.peek() != Some(b')') {
                        return Err(self.error("expected ')'"));
                    }
                    self.pos += 1;
                    coef *= if neg { -n } else { n };
                }
                _ => return Err(self.error("expected a number or a variable")),
            }
            self.skip_ws();
            if self.peek() == Some(b'*') {
                self.pos += 1;
            } else {
                return Ok((Exponent(exps), coef));
            }
        }
    }

    fn variable(&mut self) -> Result<(usize, u32), PolyError> {
        let start = self.pos;
        self.pos += 1; // 'x'
        let digits = self.digits();
        if digits.is_empty() {
            self.pos = start;
            return Err(self.error("expected variable index after 'x'"));
        }
        let index: usize = digits
            .parse()
            .map_err(|_| self.error_at(start, "variable index too large"))?;
        if index == 0 || index > self.num_vars {
            return Err(PolyError::VariableOutOfRange {
                index,
                num_vars: self.num_vars,
            });
        }
        self.skip_ws();
        let mut power = 1;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let at = self.pos;
            let digits = self.digits();
            if digits.is_empty() {
                return Err(self.error("expected exponent after '^'"));
            }
            power = digits
                .parse()
                .map_err(|_| self.error_at(at, "exponent too large"))?;
        }
        Ok((index - 1, power))
    }

    fn number(&mut self) -> Result<BigRational, PolyError> {
        let start = self.pos;
        let int_digits = self.digits();
        let mut frac_digits = String::new();
        if self.peek() == Some(b'.') {
            self.pos += 1;
            frac_digits = self.digits();
        }
        if int_digits.is_empty() && frac_digits.is_empty() {
            return Err(self.error_at(start, "malformed number"));
        }
        let mantissa: BigInt = format!("{int_digits}{frac_digits}")
            .parse()
            .map_err(|_| self.error_at(start, "malformed number"))?;
        let mut exp10: i64 = -(frac_digits.len() as i64);
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            self.pos += 1;
            let neg = match self.peek() {
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                _ => false,
            };
            let d = self.digits();
            if d.is_empty() {
                return Err(self.error("expected digits in exponent"));
            }
            let e: i64 = d
                .parse()
                .map_err(|_| self.error_at(start, "exponent too large"))?;
            exp10 += if neg { -e } else { e };
        }
        let ten = BigInt::from(10);
        let mut value = if exp10 >= 0 {
            BigRational::from_integer(mantissa * num_traits::pow(ten, exp10 as usize))
        } else {
            BigRational::new(mantissa, num_traits::pow(ten, (-exp10) as usize))
        };
        if self.peek() == Some(b'/') {
            self.pos += 1;
            let at = self.pos;
            let d = self.digits();
            if d.is_empty() {
                return Err(self.error("expected denominator after '/'"));
            }
            let den: BigInt = d
                .parse()
                .map_err(|_| self.error_at(at, "bad denominator"))?;
            if den.is_zero() {
                return Err(self.error_at(at, "zero denominator"));
            }
            value /= BigRational::from_integer(den);
        }
        Ok(value)
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn error(&self, message: &str) -> PolyError {
        self.error_at(self.pos, message)
    }

    fn error_at(&self, position: usize, message: &str) -> PolyError {
        PolyError::Syntax {
            position,
            message: message.to_string(),
        }
    }
}
