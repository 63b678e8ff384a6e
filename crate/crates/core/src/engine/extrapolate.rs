use serde::{Deserialize, Serialize};

use super::EngineError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaPoint {
    pub beta: f64,
    pub u_hat: f64,
    pub stderr_u: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub u0: f64,
    pub stderr_u0: f64,
    /// `[u₀, b, c]`, with `c` omitted for a linear fit.
    pub coefficients: Vec<f64>,
    pub degree: usize,
    pub weighted: bool,
    /// Weighted residual sum of squares.
    pub chi2: f64,
}

const MIN_RELATIVE_GAP: f64 = 1e-6;

/// Weighted least squares `u(β) = u₀ + bβ (+ cβ²)` with weights `1/stderr²`.
/// The quadratic term is used once three distinct β values are present.
/// Falls back to unit weights if any stderr is zero.
pub fn extrapolate_beta(points: &[BetaPoint]) -> Result<FitReport, EngineError> {
    if points.iter().any(|p| !(p.beta.is_finite() && p.u_hat.is_finite() && p.stderr_u.is_finite())) {
        return Err(EngineError::InvalidSpec("extrapolation points must be finite".into()));
    }
    let mut betas: Vec<f64> = points.iter().map(|p| p.beta).collect();
    betas.sort_by(f64::total_cmp);
    let scale = betas.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    let mut distinct = 0usize;
    let mut last: Option<f64> = None;
    for &b in &betas {
        match last {
            Some(l) if b == l => {}
            Some(l) if (b - l) < MIN_RELATIVE_GAP * scale => {
                return Err(EngineError::IllConditionedFit(format!("β values {l} and {b} are too close")));
            }
            _ => distinct += 1,
        }
        last = Some(b);
    }
    if distinct < 2 {
        return Err(EngineError::InsufficientPoints { distinct });
    }
    let degree = if distinct >= 3 { 2 } else { 1 };
    let weighted = points.iter().all(|p| p.stderr_u > 0.0);
    let cols = degree + 1;
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    let mut y: Vec<f64> = Vec::with_capacity(points.len());
    for p in points {
        let w = if weighted { 1.0 / p.stderr_u } else { 1.0 };
        a.push((0..cols).map(|j| w * p.beta.powi(j as i32)).collect());
        y.push(w * p.u_hat);
    }
    let (r, qty) = householder(&mut a, &mut y, cols);
    let rmax = (0..cols).fold(0.0f64, |m, i| m.max(r[i][i].abs()));
    if (0..cols).any(|i| r[i][i].abs() <= 1e-13 * rmax) {
        return Err(EngineError::IllConditionedFit("design matrix is numerically singular".into()));
    }
    let coefficients = back_substitute(&r, &qty[..cols]);
    let chi2 = qty[cols..].iter().map(|v| v * v).sum();
    // Var(u₀) = [(RᵀR)⁻¹]₀₀ = ‖row 0 of R⁻¹‖²
    let mut var0 = 0.0;
    for j in 0..cols {
        let e: Vec<f64> = (0..cols).map(|i| (i == j) as u8 as f64).collect();
        let col = back_substitute(&r, &e);
        var0 += col[0] * col[0];
    }
    let stderr_u0 = if weighted { var0.sqrt() } else { 0.0 };
    Ok(FitReport { u0: coefficients[0], stderr_u0, coefficients, degree, weighted, chi2 })
}

/// In-place Householder QR; returns the `cols×cols` factor `R` and `Qᵀy`.
fn householder(a: &mut [Vec<f64>], y: &mut [f64], cols: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let rows = a.len();
    for k in 0..cols {
        let norm = (k..rows).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..rows).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        for j in k..cols {
            let s: f64 = (k..rows).map(|i| v[i - k] * a[i][j]).sum::<f64>() * 2.0 / vv;
            for i in k..rows {
                a[i][j] -= s * v[i - k];
            }
        }
        let s: f64 = (k..rows).map(|i| v[i - k] * y[i]).sum::<f64>() * 2.0 / vv;
        for i in k..rows {
            y[i] -= s * v[i - k];
        }
    }
    let r = (0..cols).map(|i| (0..cols).map(|j| if j >= i { a[i][j] } else { 0.0 }).collect()).collect();
    (r, y.to_vec())
}

fn back_substitute(r: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|j| r[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / r[i][i];
    }
    x
}
