//! Floating-point truncated Taylor arithmetic, `c[k] = f⁽ᵏ⁾(x₀)/k!`.

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    (0..n).map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum()).collect()
}

pub fn div(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    let mut c = vec![0.0; n];
    for k in 0..n {
        let s: f64 = (1..=k).map(|j| b[j] * c[k - j]).sum();
        c[k] = (a[k] - s) / b[0];
    }
    c
}

pub fn ln(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut c = vec![0.0; n];
    if n == 0 {
        return c;
    }
    c[0] = a[0].ln();
    for k in 1..n {
        let s: f64 = (1..k).map(|j| j as f64 * c[j] * a[k - j]).sum();
        c[k] = (a[k] - s / k as f64) / a[0];
    }
    c
}

pub fn sqrt(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut c = vec![0.0; n];
    if n == 0 {
        return c;
    }
    c[0] = a[0].sqrt();
    for k in 1..n {
        let s: f64 = (1..k).map(|j| c[j] * c[k - j]).sum();
        c[k] = (a[k] - s) / (2.0 * c[0]);
    }
    c
}

pub fn asinh(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    // asinh(a)' = a' / √(1 + a²)
    let mut q = mul(a, a);
    q[0] += 1.0;
    let root = sqrt(&q);
    let da = derivative(a);
    let dres = div(&da, &root[..da.len()]);
    let mut c = vec![0.0; n];
    c[0] = a[0].asinh();
    for k in 1..n {
        c[k] = dres[k - 1] / k as f64;
    }
    c
}

/// Coefficients of the derivative (one fewer).
pub fn derivative(a: &[f64]) -> Vec<f64> {
    (1..a.len()).map(|k| k as f64 * a[k]).collect()
}

/// Converts normalized coefficients to plain derivatives `f⁽ᵏ⁾(x₀)`.
pub fn to_derivatives(c: &[f64]) -> Vec<f64> {
    let mut fact = 1.0;
    c.iter()
        .enumerate()
        .map(|(k, &v)| {
            if k > 0 {
                fact *= k as f64;
            }
            v * fact
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_coeffs(x: f64, n: usize) -> Vec<f64> {
        let mut fact = 1.0;
        (0..n)
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                x.exp() / fact
            })
            .collect()
    }

    #[test]
    fn log_of_exp_is_linear() {
        let c = ln(&exp_coeffs(0.3, 8));
        assert!((c[0] - 0.3).abs() < 1e-14);
        assert!((c[1] - 1.0).abs() < 1e-14);
        for v in &c[2..] {
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn sqrt_squares_back() {
        let a = [2.0, 0.5, -0.25, 0.1, 0.0, 0.3];
        let r = sqrt(&a);
        let sq = mul(&r, &r);
        for (x, y) in sq.iter().zip(a) {
            assert!((x - y).abs() < 1e-14);
        }
        let q = div(&a, &r);
        for (x, y) in q.iter().zip(&r) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn asinh_of_linear() {
        // asinh(x) at 0: x − x³/6 + 3x⁵/40
        let c = asinh(&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let expect = [0.0, 1.0, 0.0, -1.0 / 6.0, 0.0, 3.0 / 40.0];
        for (x, y) in c.iter().zip(expect) {
            assert!((x - y).abs() < 1e-14, "{c:?}");
        }
    }
}
