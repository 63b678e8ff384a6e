//! Truncated Laurent series in the particle mass `β` with jet-polynomial
//! coefficients.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::jet::JetPolynomial;
use super::{JetError, Rational};

/// `Σ_{j=lowest}^{truncation} c_j β^j + O(β^{truncation+1})`.
///
/// Every coefficient in `lowest..=truncation` is known exactly; orders below
/// `lowest` are zero and orders above `truncation` are unknown. Arithmetic
/// never extends `truncation`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BetaSeries {
    lowest: i32,
    coeffs: Vec<JetPolynomial>,
    truncation: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesFn {
    Log,
    Exp,
    Inverse,
    /// `√(1 + s)`
    Sqrt1p,
}

impl BetaSeries {
    /// Builds a series from coefficients of `β^lowest, β^{lowest+1}, …`;
    /// missing coefficients up to `truncation` are zero, extra ones are dropped.
    pub fn new(lowest: i32, mut coeffs: Vec<JetPolynomial>, truncation: i32) -> Self {
        let len = (truncation - lowest + 1).max(0) as usize;
        coeffs.resize(len, JetPolynomial::zero());
        BetaSeries { lowest, coeffs, truncation }
    }

    pub fn zero(truncation: i32) -> Self {
        Self::new(0, Vec::new(), truncation)
    }

    pub fn constant(p: JetPolynomial, truncation: i32) -> Self {
        Self::new(0, vec![p], truncation)
    }

    /// `p · β^order`, known to `truncation`.
    pub fn monomial(p: JetPolynomial, order: i32, truncation: i32) -> Self {
        Self::new(order.min(truncation + 1), vec![p], truncation)
    }

    pub fn lowest_order(&self) -> i32 {
        self.lowest
    }

    pub fn truncation_order(&self) -> i32 {
        self.truncation
    }

    /// Coefficient of `β^order`. Orders above the truncation are not known
    /// and yield `None`.
    pub fn coeff(&self, order: i32) -> Option<JetPolynomial> {
        if order > self.truncation {
            None
        } else if order < self.lowest {
            Some(JetPolynomial::zero())
        } else {
            Some(self.coeffs[(order - self.lowest) as usize].clone())
        }
    }

    fn coeff_ref(&self, order: i32) -> Option<&JetPolynomial> {
        if order < self.lowest || order > self.truncation {
            None
        } else {
            Some(&self.coeffs[(order - self.lowest) as usize])
        }
    }

    /// Lowest order with a nonzero coefficient, if any.
    pub fn leading_order(&self) -> Option<i32> {
        self.coeffs.iter().position(|c| !c.is_zero()).map(|i| self.lowest + i as i32)
    }

    /// Drops known orders above `order`.
    pub fn truncate(&self, order: i32) -> Self {
        let t = order.min(self.truncation);
        Self::new(self.lowest, self.coeffs.clone(), t)
    }

    /// Multiplies by `β^k`.
    pub fn shift(&self, k: i32) -> Self {
        BetaSeries { lowest: self.lowest + k, coeffs: self.coeffs.clone(), truncation: self.truncation + k }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        self.map(|p| p.scale(c))
    }

    pub fn mul_poly(&self, q: &JetPolynomial) -> Self {
        self.map(|p| p * q)
    }

    pub fn total_derivative(&self) -> Self {
        self.map(JetPolynomial::total_derivative)
    }

    fn map(&self, f: impl Fn(&JetPolynomial) -> JetPolynomial) -> Self {
        BetaSeries { lowest: self.lowest, coeffs: self.coeffs.iter().map(f).collect(), truncation: self.truncation }
    }

    pub fn add(&self, other: &Self) -> Self {
        let lowest = self.lowest.min(other.lowest);
        let truncation = self.truncation.min(other.truncation);
        let coeffs = (lowest..=truncation)
            .map(|j| match (self.coeff_ref(j), other.coeff_ref(j)) {
                (Some(a), Some(b)) => a + b,
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => JetPolynomial::zero(),
            })
            .collect();
        Self::new(lowest, coeffs, truncation)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let lowest = self.lowest + other.lowest;
        let truncation = (self.truncation + other.lowest).min(other.truncation + self.lowest);
        let coeffs = (lowest..=truncation)
            .map(|j| {
                let mut acc = JetPolynomial::zero();
                for i in self.lowest..=self.truncation {
                    let Some(a) = self.coeff_ref(i) else { continue };
                    let Some(b) = other.coeff_ref(j - i) else { continue };
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = &acc + &(a * b);
                }
                acc
            })
            .collect();
        Self::new(lowest, coeffs, truncation)
    }

    pub fn pow(&self, n: u32) -> Self {
        if n == 0 {
            return Self::constant(JetPolynomial::one(), self.truncation - self.lowest);
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Numeric value of the truncated sum at `β` and jet values `u`.
    pub fn eval(&self, beta: f64, u: &[f64]) -> f64 {
        self.coeffs.iter().enumerate().map(|(i, c)| c.eval(u) * beta.powi(self.lowest + i as i32)).sum()
    }

    /// Splits a series with no negative orders into its `β⁰` coefficient and
    /// the remainder of order ≥ 1.
    fn split_constant(&self, f: SeriesFn) -> Result<(JetPolynomial, BetaSeries), JetError> {
        if let Some(lead) = self.leading_order() {
            if lead < 0 {
                return Err(JetError::NonUnitLeadingTerm {
                    function: f,
                    leading: format!("β^{lead}·({})", self.coeff(lead).unwrap_or_default()),
                });
            }
        }
        let c0 = self.coeff(0).unwrap_or_default();
        let rest: Vec<JetPolynomial> = (1..=self.truncation).map(|j| self.coeff(j).unwrap_or_default()).collect();
        Ok((c0, BetaSeries::new(1, rest, self.truncation.max(0))))
    }

    /// `Σ_{n≥0} a_n r^n` for `r` of order ≥ 1, truncated at this series' order.
    fn power_sum(r: &BetaSeries, truncation: i32, coeff: impl Fn(u32) -> Rational) -> BetaSeries {
        let mut out = BetaSeries::constant(JetPolynomial::constant(coeff(0)), truncation);
        let mut rn = BetaSeries::constant(JetPolynomial::one(), truncation);
        for n in 1..=truncation.max(0) as u32 {
            rn = rn.mul(r).truncate(truncation);
            let a = coeff(n);
            if !a.is_zero() {
                out = out.add(&rn.scale(&a));
            }
        }
        out
    }

    /// Composition `f(s)` to the truncation order of `s`.
    pub fn compose(&self, f: SeriesFn) -> Result<BetaSeries, JetError> {
        let k = self.truncation;
        let (c0, r) = self.split_constant(f)?;
        let non_unit = |c0: &JetPolynomial| JetError::NonUnitLeadingTerm { function: f, leading: c0.to_string() };
        match f {
            SeriesFn::Exp => {
                if !c0.is_zero() {
                    return Err(non_unit(&c0));
                }
                Ok(Self::power_sum(&r, k, |n| Rational::new(BigInt::one(), factorial(n))))
            }
            SeriesFn::Log => {
                if c0.as_constant() != Some(Rational::one()) {
                    return Err(non_unit(&c0));
                }
                Ok(Self::power_sum(&r, k, |n| {
                    if n == 0 {
                        Rational::zero()
                    } else {
                        let sign = if n % 2 == 1 { 1 } else { -1 };
                        Rational::new(BigInt::from(sign), BigInt::from(n))
                    }
                }))
            }
            SeriesFn::Inverse => {
                let c = match c0.as_constant() {
                    Some(c) if !c.is_zero() => c,
                    _ => return Err(non_unit(&c0)),
                };
                let inv_c = c.recip();
                // 1/(c + r) = (1/c) Σ (−r/c)^n
                let scaled = r.scale(&-inv_c.clone());
                Ok(Self::power_sum(&scaled, k, |_| Rational::one()).scale(&inv_c))
            }
            SeriesFn::Sqrt1p => {
                if !c0.is_zero() {
                    return Err(non_unit(&c0));
                }
                Ok(Self::power_sum(&r, k, binomial_half))
            }
        }
    }

    /// `∂ₓ log s = (∂ₓ s)/s`, defined whenever `s` has a nonzero constant
    /// leading term (the constant's logarithm is annihilated by `∂ₓ`).
    pub fn log_derivative(&self) -> Result<BetaSeries, JetError> {
        let inv = self.compose(SeriesFn::Inverse)?;
        Ok(self.total_derivative().mul(&inv))
    }
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `binom(1/2, n)`.
fn binomial_half(n: u32) -> Rational {
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let mut acc = Rational::one();
    for k in 0..n {
        acc = acc * (&half - Rational::from_integer(BigInt::from(k))) / Rational::from_integer(BigInt::from(k + 1));
    }
    acc
}

impl fmt::Display for BetaSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            let order = self.lowest + i as i32;
            match order {
                0 => write!(f, "({c})")?,
                1 => write!(f, "β·({c})")?,
                _ => write!(f, "β^{order}·({c})")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        write!(f, " + O(β^{})", self.truncation + 1)
    }
}
