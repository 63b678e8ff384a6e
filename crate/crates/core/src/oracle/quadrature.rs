use std::sync::OnceLock;

pub const GAUSS_HERMITE_NODES: usize = 64;

/// Nodes and weights for `∫ e^{−ξ²} h(ξ) dξ` (physicists' Hermite), by
/// Newton iteration on the orthonormal recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn table() -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    TABLE.get_or_init(|| gauss_hermite(GAUSS_HERMITE_NODES))
}

/// `E h(x + W_t)` for a standard Brownian motion `W`.
pub fn heat_expectation(h: impl Fn(f64) -> f64, x: f64, t: f64) -> f64 {
    let (nodes, weights) = table();
    let s = (2.0 * t).sqrt();
    let sum: f64 = nodes.iter().zip(weights).map(|(z, w)| w * h(x + s * z)).sum();
    sum / std::f64::consts::PI.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_integrate_moments() {
        let (x, w) = gauss_hermite(GAUSS_HERMITE_NODES);
        let sp = std::f64::consts::PI.sqrt();
        assert!((w.iter().sum::<f64>() - sp).abs() < 1e-13);
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((m2 - sp / 2.0).abs() < 1e-13);
        let m8: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((m8 - 105.0 / 16.0 * sp).abs() < 1e-11);
    }

    #[test]
    fn gaussian_expectations() {
        let t = 0.7;
        let c = heat_expectation(|y| (0.5 * y).cos(), 0.3, t);
        assert!((c - (-0.125 * t).exp() * 0.15f64.cos()).abs() < 1e-14);
        let e = heat_expectation(|y| (-0.4 * y).exp(), 0.0, t);
        assert!((e - (0.08 * t).exp()).abs() < 1e-14);
    }
}
