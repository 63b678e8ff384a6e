//! Exact polynomials over the jet variables `u₀ = u`, `u₁ = ∂ₓu`, `u₂ = ∂ₓ²u`, ...

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{JetError, Rational};

/// Exponent vector `(e₀, …, e_d)` with trailing zeros stripped, so every
/// monomial has exactly one representation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(mut exps: Vec<u32>) -> Self {
        while exps.last() == Some(&0) {
            exps.pop();
        }
        Monomial(exps)
    }

    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    /// The single jet variable `u_k`.
    pub fn var(k: usize) -> Self {
        let mut exps = vec![0; k + 1];
        exps[k] = 1;
        Monomial(exps)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn exponent(&self, k: usize) -> u32 {
        self.0.get(k).copied().unwrap_or(0)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let n = self.0.len().max(other.0.len());
        let exps = (0..n).map(|k| self.exponent(k) + other.exponent(k)).collect();
        Monomial::new(exps)
    }

    /// Display order: higher total degree first, then lower jet variables first.
    fn display_cmp(&self, other: &Monomial) -> Ordering {
        other.degree().cmp(&self.degree()).then_with(|| {
            let n = self.0.len().max(other.0.len());
            for k in 0..n {
                match other.exponent(k).cmp(&self.exponent(k)) {
                    Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            Ordering::Equal
        })
    }
}

/// Name of jet variable `u_k` in the textual format: `u`, `ux`, `uxx`, ...
pub fn jet_var_name(k: usize) -> String {
    let mut s = String::from("u");
    s.extend(std::iter::repeat_n('x', k));
    s
}

/// A polynomial in the jet variables with exact rational coefficients.
///
/// Zero coefficients are never stored, so the zero polynomial is the empty
/// term map and structural equality is mathematical equality.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct JetPolynomial {
    terms: BTreeMap<Monomial, Rational>,
}

impl JetPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::term(c, Monomial::one())
    }

    /// The jet variable `u_k`.
    pub fn var(k: usize) -> Self {
        Self::term(Rational::one(), Monomial::var(k))
    }

    pub fn term(c: Rational, m: Monomial) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest jet index `d` appearing in any term (0 for constants).
    pub fn max_jet_order(&self) -> usize {
        self.terms.keys().map(|m| m.0.len().saturating_sub(1)).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&Monomial::one())
    }

    /// `Some(c)` when the polynomial is the constant `c` (including zero).
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        JetPolynomial { terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect() }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Total x-derivative, with `∂ₓ u_k = u_{k+1}` and the product rule.
    pub fn total_derivative(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            for (k, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let mut exps = m.0.clone();
                exps[k] -= 1;
                if exps.len() < k + 2 {
                    exps.resize(k + 2, 0);
                }
                exps[k + 1] += 1;
                out.add_term(Monomial::new(exps), c * Rational::from_integer(BigInt::from(e)));
            }
        }
        out
    }

    /// Floating-point evaluation at jet values `u[k]` (missing entries are zero).
    pub fn eval(&self, u: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut v = rational_to_f64(c);
                for (k, &e) in m.0.iter().enumerate() {
                    if e > 0 {
                        v *= u.get(k).copied().unwrap_or(0.0).powi(e as i32);
                    }
                }
                v
            })
            .sum()
    }

    fn sorted_terms(&self) -> Vec<(&Monomial, &Rational)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| a.0.display_cmp(b.0));
        v
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    if n.is_finite() && d.is_finite() {
        n / d
    } else {
        // huge numerators/denominators: scale down before dividing
        let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
        let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
        let d = (r.denom() >> shift).to_f64().unwrap_or(1.0);
        n / d
    }
}

impl Add for &JetPolynomial {
    type Output = JetPolynomial;
    fn add(self, rhs: &JetPolynomial) -> JetPolynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &JetPolynomial {
    type Output = JetPolynomial;
    fn sub(self, rhs: &JetPolynomial) -> JetPolynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &JetPolynomial {
    type Output = JetPolynomial;
    fn mul(self, rhs: &JetPolynomial) -> JetPolynomial {
        let mut out = JetPolynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &JetPolynomial {
    type Output = JetPolynomial;
    fn neg(self) -> JetPolynomial {
        JetPolynomial { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for JetPolynomial {
            type Output = JetPolynomial;
            fn $f(self, rhs: JetPolynomial) -> JetPolynomial {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for JetPolynomial {
    type Output = JetPolynomial;
    fn neg(self) -> JetPolynomial {
        -&self
    }
}

impl fmt::Display for JetPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.sorted_terms().into_iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let mut factors: Vec<String> = Vec::new();
            if !abs.is_one() || m.0.is_empty() {
                factors.push(abs.to_string());
            }
            for (k, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(jet_var_name(k)),
                    _ => factors.push(format!("{}^{}", jet_var_name(k), e)),
                }
            }
            f.write_str(&factors.join("*"))?;
        }
        Ok(())
    }
}

impl FromStr for JetPolynomial {
    type Err = JetError;

    /// Parses sums of products such as `2*u^2 + 1/2*ux^2`, `-u^3`, `0.5*u0*u1`.
    /// Variables are `u`, `ux`, `uxx`, … or equivalently `u0`, `u1`, `u2`, ….
    fn from_str(s: &str) -> Result<Self, JetError> {
        Parser::new(s).parse()
    }
}

struct Parser<'a> {
    src: &'a str,
    chars: Vec<char>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, chars: src.chars().collect(), pos: 0 }
    }

    fn err(&self, msg: &str) -> JetError {
        JetError::Parse { input: self.src.to_string(), message: format!("{msg} at offset {}", self.pos) }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<JetPolynomial, JetError> {
        let mut out = JetPolynomial::zero();
        let mut sign = Rational::one();
        match self.peek() {
            Some('-') => {
                sign = -sign;
                self.pos += 1;
            }
            Some('+') => self.pos += 1,
            None => return Err(self.err("empty expression")),
            _ => {}
        }
        loop {
            let t = self.term()?;
            out = &out + &t.scale(&sign);
            match self.peek() {
                None => break,
                Some('+') => {
                    sign = Rational::one();
                    self.pos += 1;
                }
                Some('-') => {
                    sign = -Rational::one();
                    self.pos += 1;
                }
                Some(_) => return Err(self.err("expected '+' or '-'")),
            }
        }
        Ok(out)
    }

    fn term(&mut self) -> Result<JetPolynomial, JetError> {
        let mut acc = self.factor()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            let f = self.factor()?;
            acc = &acc * &f;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<JetPolynomial, JetError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let mut r = self.number()?;
                if self.peek() == Some('/') {
                    self.pos += 1;
                    let d = self.number()?;
                    if d.is_zero() {
                        return Err(self.err("division by zero"));
                    }
                    r /= d;
                }
                Ok(JetPolynomial::constant(r))
            }
            Some('u') => {
                self.pos += 1;
                let k = if self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                    let start = self.pos;
                    while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                        self.pos += 1;
                    }
                    let s: String = self.chars[start..self.pos].iter().collect();
                    s.parse::<usize>().map_err(|_| self.err("bad jet index"))?
                } else {
                    let mut k = 0;
                    while self.chars.get(self.pos) == Some(&'x') {
                        self.pos += 1;
                        k += 1;
                    }
                    k
                };
                let mut e = 1u32;
                if self.peek() == Some('^') {
                    self.pos += 1;
                    self.skip_ws();
                    let start = self.pos;
                    while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                        self.pos += 1;
                    }
                    let s: String = self.chars[start..self.pos].iter().collect();
                    e = s.parse().map_err(|_| self.err("bad exponent"))?;
                }
                Ok(JetPolynomial::var(k).pow(e))
            }
            Some('(') => Err(self.err("parentheses are not supported")),
            _ => Err(self.err("expected number or jet variable")),
        }
    }

    fn number(&mut self) -> Result<Rational, JetError> {
        self.skip_ws();
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit() || *c == '.') {
            self.pos += 1;
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        parse_decimal(&s).ok_or_else(|| self.err("bad number"))
    }
}

/// Parses `123`, `0.25`, `-3/4` exactly.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest.trim()),
        None => (false, s),
    };
    let r = match body.split_once('/') {
        Some((n, d)) => {
            let n = parse_decimal(n.trim())?;
            let d = parse_decimal(d.trim())?;
            if d.is_zero() {
                return None;
            }
            n / d
        }
        None => parse_decimal(body)?,
    };
    Some(if neg { -r } else { r })
}

fn parse_decimal(s: &str) -> Option<Rational> {
    if s.is_empty() {
        return None;
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let n: BigInt = digits.parse().ok()?;
    let d = num_traits::pow(BigInt::from(10), frac.len());
    Some(Rational::new(n, d))
}

impl Serialize for JetPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for JetPolynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn u(k: usize) -> JetPolynomial {
        JetPolynomial::var(k)
    }

    #[test]
    fn derivative_of_square() {
        let p = &u(0) * &u(0);
        let expected = (&u(0) * &u(1)).scale(&r(2, 1));
        assert_eq!(p.total_derivative(), expected);
    }

    #[test]
    fn product_and_cancellation() {
        let p = &u(0) * &u(1);
        assert_eq!(p.num_terms(), 1);
        assert_eq!(p.coeff(&Monomial::new(vec![1, 1])), r(1, 1));
        let sq = &u(0) * &u(0);
        let z = &sq + &(-&sq);
        assert!(z.is_zero());
        assert_eq!(z.num_terms(), 0);
    }

    #[test]
    fn derivative_chain_on_higher_jets() {
        // d/dx (u1^2 u2) = 2 u1 u2^2 + u1^2 u3
        let p = &(&u(1) * &u(1)) * &u(2);
        let expected = &(&(&u(1) * &u(2)) * &u(2)).scale(&r(2, 1)) + &(&(&u(1) * &u(1)) * &u(3));
        assert_eq!(p.total_derivative(), expected);
        assert_eq!(expected.max_jet_order(), 3);
    }

    #[test]
    fn display_and_parse() {
        let p = &(&u(0) * &u(0)).scale(&r(2, 1)) + &(&u(1) * &u(1)).scale(&r(1, 2));
        assert_eq!(p.to_string(), "2*u^2 + 1/2*ux^2");
        assert_eq!("2*u^2 + 1/2*ux^2".parse::<JetPolynomial>().unwrap(), p);
        assert_eq!("1/2*u1^2 + 2*u0^2".parse::<JetPolynomial>().unwrap(), p);
        let c = "-u^3".parse::<JetPolynomial>().unwrap();
        assert_eq!(c, -u(0).pow(3));
        assert_eq!(c.to_string(), "-u^3");
        assert_eq!("0.5*u*ux - 3".parse::<JetPolynomial>().unwrap().to_string(), "1/2*u*ux - 3");
        assert_eq!(JetPolynomial::zero().to_string(), "0");
    }

    #[test]
    fn parse_errors() {
        assert!("".parse::<JetPolynomial>().is_err());
        assert!("2*(u)".parse::<JetPolynomial>().is_err());
        assert!("u^".parse::<JetPolynomial>().is_err());
        assert!("1/0".parse::<JetPolynomial>().is_err());
        assert!("u v".parse::<JetPolynomial>().is_err());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("1/10"), Some(r(1, 10)));
        assert_eq!(parse_rational("-3/4"), Some(r(-3, 4)));
        assert_eq!(parse_rational("0.25"), Some(r(1, 4)));
        assert_eq!(parse_rational("5"), Some(r(5, 1)));
        assert_eq!(parse_rational("x"), None);
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn eval_matches_terms() {
        let p: JetPolynomial = "2*u^2 + 1/2*ux^2 - u*ux".parse().unwrap();
        let v = p.eval(&[0.3, -0.4]);
        assert!((v - (2.0 * 0.09 + 0.5 * 0.16 + 0.12)).abs() < 1e-15);
    }
}
