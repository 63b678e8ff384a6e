//! Boundary and initial data with closed-form derivatives of every order.

pub mod taylor;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jetcalc::Rescaling;

#[derive(Debug, Error, PartialEq)]
pub enum FunctionError {
    #[error("β·g reaches {value} ≥ 1 on the evaluation window; type I inversion is undefined")]
    BoundaryOutOfRange { value: f64 },
    #[error("invalid function parameters: {0}")]
    InvalidParameters(String),
}

/// Closed interval of x values where a function is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    /// Number of diffusion standard deviations covered by [`Window::around`].
    pub const DEFAULT_WIDTH_SIGMAS: f64 = 8.0;

    pub fn new(lo: f64, hi: f64) -> Self {
        Window { lo: lo.min(hi), hi: lo.max(hi) }
    }

    /// `x ± 8√t`: where a diffusion started at `x` lands by time `t`.
    pub fn around(x: f64, t: f64) -> Self {
        let half = Self::DEFAULT_WIDTH_SIGMAS * t.max(0.0).sqrt();
        Window::new(x - half, x + half)
    }

    fn radius(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }
}

/// Something that can report `f(x), f'(x), …, f⁽ⁿ⁾(x)`.
pub trait DerivativeSource: Sync {
    /// Derivatives of orders `0..=n` at `x`.
    fn derivatives(&self, x: f64, n: usize) -> Vec<f64>;

    fn value(&self, x: f64) -> f64 {
        self.derivatives(x, 0)[0]
    }
}

/// Supported families of boundary/initial functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryFunction {
    /// `offset + a·cos(ωx + phase)`
    Cosine {
        a: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `a·e^{λx}`
    Exponential {
        a: f64,
        lambda: f64,
    },
    /// `Σ coeffs[k]·x^k`
    Polynomial {
        coeffs: Vec<f64>,
    },
    Constant {
        c: f64,
    },
}

impl BoundaryFunction {
    pub fn cosine(a: f64, omega: f64) -> Self {
        BoundaryFunction::Cosine { a, omega, phase: 0.0, offset: 0.0 }
    }

    pub fn cosine_with_offset(offset: f64, a: f64, omega: f64) -> Self {
        BoundaryFunction::Cosine { a, omega, phase: 0.0, offset }
    }

    pub fn constant(c: f64) -> Self {
        BoundaryFunction::Constant { c }
    }

    pub fn validate(&self) -> Result<(), FunctionError> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let ok = match self {
            BoundaryFunction::Cosine { a, omega, phase, offset } => finite(&[*a, *omega, *phase, *offset]),
            BoundaryFunction::Exponential { a, lambda } => finite(&[*a, *lambda]),
            BoundaryFunction::Polynomial { coeffs } => finite(coeffs),
            BoundaryFunction::Constant { c } => c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(FunctionError::InvalidParameters(format!("non-finite parameter in {self:?}")))
        }
    }

    /// `f⁽ⁿ⁾(x)` in closed form.
    pub fn eval_derivative(&self, n: usize, x: f64) -> f64 {
        match self {
            BoundaryFunction::Cosine { a, omega, phase, offset } => {
                let theta = omega * x + phase;
                let base = if n == 0 { *offset } else { 0.0 };
                // cos(θ + nπ/2) without accumulating multiples of π/2
                let trig = match n % 4 {
                    0 => theta.cos(),
                    1 => -theta.sin(),
                    2 => -theta.cos(),
                    _ => theta.sin(),
                };
                base + a * omega.powi(n as i32) * trig
            }
            BoundaryFunction::Exponential { a, lambda } => a * lambda.powi(n as i32) * (lambda * x).exp(),
            BoundaryFunction::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for k in (n..coeffs.len()).rev() {
                    acc = acc * x + coeffs[k] * falling_factorial(k, n);
                }
                acc
            }
            BoundaryFunction::Constant { c } => {
                if n == 0 {
                    *c
                } else {
                    0.0
                }
            }
        }
    }

    /// Finite bound on `Σₙ sup_x |f⁽ⁿ⁾(x)|` over `window` (the whole line
    /// when `None`), or `+∞` when none exists.
    pub fn derivative_sum_bound(&self, window: Option<Window>) -> f64 {
        match self {
            BoundaryFunction::Cosine { a, omega, offset, .. } => {
                if *a == 0.0 {
                    offset.abs()
                } else if omega.abs() < 1.0 {
                    offset.abs() + a.abs() / (1.0 - omega.abs())
                } else {
                    f64::INFINITY
                }
            }
            BoundaryFunction::Exponential { a, lambda } => {
                if *a == 0.0 {
                    0.0
                } else if *lambda == 0.0 {
                    a.abs()
                } else if lambda.abs() < 1.0 {
                    match window {
                        Some(w) => a.abs() * (lambda * w.lo).exp().max((lambda * w.hi).exp()) / (1.0 - lambda.abs()),
                        None => f64::INFINITY,
                    }
                } else {
                    f64::INFINITY
                }
            }
            BoundaryFunction::Polynomial { coeffs } => {
                let degree = coeffs.iter().rposition(|c| *c != 0.0);
                match (degree, window) {
                    (None, _) => 0.0,
                    (Some(0), _) => coeffs[0].abs(),
                    (Some(_), None) => f64::INFINITY,
                    (Some(d), Some(w)) => {
                        let r = w.radius();
                        (0..=d)
                            .map(|n| {
                                (n..=d)
                                    .map(|k| coeffs[k].abs() * falling_factorial(k, n) * r.powi((k - n) as i32))
                                    .sum::<f64>()
                            })
                            .sum()
                    }
                }
            }
            BoundaryFunction::Constant { c } => c.abs(),
        }
    }

    /// Upper bound of `f` on `window` (the whole line when `None`).
    pub fn sup(&self, window: Option<Window>) -> f64 {
        match self {
            BoundaryFunction::Cosine { a, offset, .. } => offset + a.abs(),
            BoundaryFunction::Constant { c } => *c,
            BoundaryFunction::Exponential { a, lambda } => match window {
                Some(w) => (a * (lambda * w.lo).exp()).max(a * (lambda * w.hi).exp()),
                None if *a <= 0.0 => 0.0,
                None if *lambda == 0.0 => *a,
                None => f64::INFINITY,
            },
            BoundaryFunction::Polynomial { coeffs } => match window {
                Some(w) => {
                    let r = w.radius();
                    coeffs.iter().enumerate().map(|(k, c)| c.abs() * r.powi(k as i32)).sum()
                }
                None if coeffs.iter().skip(1).all(|c| *c == 0.0) => coeffs.first().copied().unwrap_or(0.0),
                None => f64::INFINITY,
            },
        }
    }

    /// Normalized Taylor coefficients `f⁽ᵏ⁾(x)/k!` for `k = 0..=n`.
    pub fn taylor(&self, x: f64, n: usize) -> Vec<f64> {
        let mut fact = 1.0;
        (0..=n)
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                self.eval_derivative(k, x) / fact
            })
            .collect()
    }
}

fn falling_factorial(k: usize, n: usize) -> f64 {
    ((k - n + 1)..=k).map(|j| j as f64).product()
}

impl DerivativeSource for BoundaryFunction {
    fn derivatives(&self, x: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| self.eval_derivative(k, x)).collect()
    }

    fn value(&self, x: f64) -> f64 {
        self.eval_derivative(0, x)
    }
}

/// Exit datum `f` whose rescaled image equals a prescribed `g`:
/// type I `f = −log(1 − βg)/β`, type II `f = asinh(βg)/β`.
#[derive(Clone, Debug, PartialEq)]
pub struct InvertedBoundary {
    g: BoundaryFunction,
    beta: f64,
    rescaling: Rescaling,
}

impl InvertedBoundary {
    pub fn target(&self) -> &BoundaryFunction {
        &self.g
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Solves for `f` so that the rescaling map applied to `f` reproduces `g`.
pub fn invert_boundary(
    g: &BoundaryFunction,
    beta: f64,
    rescaling: Rescaling,
    window: Option<Window>,
) -> Result<InvertedBoundary, FunctionError> {
    g.validate()?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(FunctionError::InvalidParameters(format!("β must be positive, got {beta}")));
    }
    if rescaling == Rescaling::TypeI {
        let top = beta * g.sup(window);
        if top >= 1.0 {
            return Err(FunctionError::BoundaryOutOfRange { value: top });
        }
    }
    Ok(InvertedBoundary { g: g.clone(), beta, rescaling })
}

impl DerivativeSource for InvertedBoundary {
    fn derivatives(&self, x: f64, n: usize) -> Vec<f64> {
        if n == 0 {
            return vec![self.value(x)];
        }
        let b = self.beta;
        let g = self.g.taylor(x, n);
        let coeffs: Vec<f64> = match self.rescaling {
            Rescaling::TypeI => {
                let h: Vec<f64> =
                    g.iter().enumerate().map(|(k, v)| if k == 0 { 1.0 - b * v } else { -b * v }).collect();
                taylor::ln(&h).iter().map(|v| -v / b).collect()
            }
            Rescaling::TypeII(_) => {
                let s: Vec<f64> = g.iter().map(|v| b * v).collect();
                taylor::asinh(&s).iter().map(|v| v / b).collect()
            }
        };
        let mut out = taylor::to_derivatives(&coeffs);
        out[0] = self.value(x);
        out
    }

    fn value(&self, x: f64) -> f64 {
        let bg = self.beta * self.g.value(x);
        match self.rescaling {
            Rescaling::TypeI => -(-bg).ln_1p() / self.beta,
            Rescaling::TypeII(_) => bg.asinh() / self.beta,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetcalc::Type2Convention;

    const TYPE2: Rescaling = Rescaling::TypeII(Type2Convention::PaperLiteral);

    #[test]
    fn closed_form_examples() {
        assert_eq!(BoundaryFunction::cosine(1.0, 1.0).eval_derivative(1, 0.0), 0.0);
        assert_eq!(BoundaryFunction::constant(0.5).eval_derivative(3, 7.0), 0.0);
        let e = BoundaryFunction::Exponential { a: 1.0, lambda: 0.5 };
        assert!((e.eval_derivative(2, 0.0) - 0.25).abs() < 1e-15);
        let p = BoundaryFunction::Polynomial { coeffs: vec![1.0, 0.0, 3.0, 2.0] };
        // p = 1 + 3x² + 2x³ ; p'' = 6 + 12x ; p''' = 12
        assert!((p.eval_derivative(0, 2.0) - 29.0).abs() < 1e-12);
        assert!((p.eval_derivative(2, 2.0) - 30.0).abs() < 1e-12);
        assert!((p.eval_derivative(3, -5.0) - 12.0).abs() < 1e-12);
        assert_eq!(p.eval_derivative(4, 1.0), 0.0);
    }

    #[test]
    fn sum_bounds() {
        assert!((BoundaryFunction::cosine(0.2, 0.5).derivative_sum_bound(None) - 0.4).abs() < 1e-15);
        assert_eq!(BoundaryFunction::cosine(1.0, 1.5).derivative_sum_bound(None), f64::INFINITY);
        assert_eq!(BoundaryFunction::cosine(1.0, 1.0).derivative_sum_bound(None), f64::INFINITY);
        let p = BoundaryFunction::Polynomial { coeffs: vec![1.0, 0.0, 1.0] };
        assert!(p.derivative_sum_bound(Some(Window::new(-3.0, 3.0))).is_finite());
        assert!(p.derivative_sum_bound(Some(Window::new(-1e3, 1e3))).is_finite());
        assert_eq!(p.derivative_sum_bound(None), f64::INFINITY);
        let e = BoundaryFunction::Exponential { a: 1.0, lambda: 0.5 };
        assert_eq!(e.derivative_sum_bound(None), f64::INFINITY);
        let w = Window::new(-2.0, 2.0);
        assert!((e.derivative_sum_bound(Some(w)) - 1f64.exp() / 0.5).abs() < 1e-12);
        let e2 = BoundaryFunction::Exponential { a: 1.0, lambda: 1.2 };
        assert_eq!(e2.derivative_sum_bound(Some(w)), f64::INFINITY);
    }

    #[test]
    fn bound_dominates_partial_sums() {
        let f = BoundaryFunction::Cosine { a: 0.3, omega: 0.7, phase: 0.4, offset: -0.1 };
        let b = f.derivative_sum_bound(None);
        for x in [-3.0, 0.0, 1.7] {
            let s: f64 = (0..60).map(|n| f.eval_derivative(n, x).abs()).sum();
            assert!(s <= b + 1e-12);
        }
    }

    #[test]
    fn inversion_examples() {
        let zero = invert_boundary(&BoundaryFunction::constant(0.0), 0.3, Rescaling::TypeI, None).unwrap();
        assert_eq!(zero.value(1.0), 0.0);
        let f = invert_boundary(&BoundaryFunction::constant(0.2), 0.2, TYPE2, None).unwrap();
        let expect = 0.04f64.asinh() / 0.2;
        assert!((f.value(0.0) - expect).abs() < 1e-15);
        // asinh(0.04)/0.2 evaluated independently to 15 digits
        assert!((f.value(0.0) - 0.199_946_705_030_135).abs() < 1e-14);
        let half = BoundaryFunction::constant(0.5);
        let mut prev = f64::INFINITY;
        for beta in [0.1, 0.01, 0.001] {
            let err = (invert_boundary(&half, beta, Rescaling::TypeI, None).unwrap().value(0.0) - 0.5).abs();
            assert!(err < beta, "error {err} at β={beta}");
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn type1_out_of_range() {
        let g = BoundaryFunction::constant(2.0);
        assert!(matches!(
            invert_boundary(&g, 0.5, Rescaling::TypeI, None),
            Err(FunctionError::BoundaryOutOfRange { .. })
        ));
        assert!(invert_boundary(&g, 0.5, TYPE2, None).is_ok());
        assert!(invert_boundary(&g, 0.0, TYPE2, None).is_err());
    }

    #[test]
    fn inverted_derivatives_match_finite_differences() {
        let g = BoundaryFunction::cosine_with_offset(0.1, 0.1, 0.5);
        for r in [Rescaling::TypeI, TYPE2] {
            let f = invert_boundary(&g, 0.4, r, None).unwrap();
            let x = 0.37;
            let d = f.derivatives(x, 4);
            let h = 1e-3;
            for k in 0..4 {
                let num = (f.derivatives(x + h, k)[k] - f.derivatives(x - h, k)[k]) / (2.0 * h);
                assert!((num - d[k + 1]).abs() < 1e-6 * (1.0 + d[k + 1].abs()), "{r} order {k}: {num} vs {}", d[k + 1]);
            }
        }
    }
}
