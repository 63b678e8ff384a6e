//! Mergeable running mean/variance (Welford with the pairwise update of
//! Chan, Golub and LeVeque).

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
    /// Smallest replica index folded in; used to fix the merge order.
    origin: u64,
}

impl Default for EstimatorAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl EstimatorAccumulator {
    pub fn new() -> Self {
        EstimatorAccumulator { count: 0, mean: 0.0, m2: 0.0, origin: u64::MAX }
    }

    pub fn push(&mut self, index: u64, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.origin = self.origin.min(index);
    }

    pub fn from_samples(first_index: u64, xs: &[f64]) -> Self {
        let mut acc = Self::new();
        for (i, &x) in xs.iter().enumerate() {
            acc.push(first_index + i as u64, x);
        }
        acc
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    /// Combines two accumulators. Operands are put in canonical order
    /// (count, then origin) first, so `merge(a, b)` and `merge(b, a)` are
    /// bit-identical.
    pub fn merge(a: &Self, b: &Self) -> Self {
        let (x, y) = if (a.count, a.origin) <= (b.count, b.origin) { (a, b) } else { (b, a) };
        if x.count == 0 {
            return *y;
        }
        let n = x.count + y.count;
        let delta = y.mean - x.mean;
        let nf = n as f64;
        EstimatorAccumulator {
            count: n,
            mean: x.mean + delta * (y.count as f64 / nf),
            m2: x.m2 + y.m2 + delta * delta * (x.count as f64 * y.count as f64 / nf),
            origin: x.origin.min(y.origin),
        }
    }
}

pub fn merge_accumulators(a: &EstimatorAccumulator, b: &EstimatorAccumulator) -> EstimatorAccumulator {
    EstimatorAccumulator::merge(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn two_pass(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        (mean, m2)
    }

    #[test]
    fn empty_is_identity() {
        let a = EstimatorAccumulator::from_samples(0, &[1.0, 2.0, 4.0]);
        assert_eq!(merge_accumulators(&a, &EstimatorAccumulator::new()), a);
        assert_eq!(merge_accumulators(&EstimatorAccumulator::new(), &a), a);
    }

    #[test]
    fn four_way_split_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i as f64) * 0.731).sin() * 3.0 + 1.0).collect();
        let parts: Vec<_> =
            xs.chunks(250).enumerate().map(|(k, c)| EstimatorAccumulator::from_samples(250 * k as u64, c)).collect();
        let merged = parts.iter().fold(EstimatorAccumulator::new(), |acc, p| merge_accumulators(&acc, p));
        let (mean, m2) = two_pass(&xs);
        assert_eq!(merged.count(), 1000);
        assert!(rel(merged.mean(), mean) < 1e-12);
        assert!(rel(merged.m2(), m2) < 1e-12);
    }

    proptest! {
        #[test]
        fn merge_commutes_bitwise(xs in prop::collection::vec(-1e3f64..1e3, 1..40), ys in prop::collection::vec(-1e3f64..1e3, 1..40)) {
            let a = EstimatorAccumulator::from_samples(0, &xs);
            let b = EstimatorAccumulator::from_samples(xs.len() as u64, &ys);
            let ab = merge_accumulators(&a, &b);
            let ba = merge_accumulators(&b, &a);
            prop_assert_eq!(ab.mean().to_bits(), ba.mean().to_bits());
            prop_assert_eq!(ab.m2().to_bits(), ba.m2().to_bits());
            prop_assert!(ab.variance() >= 0.0);
            let all: Vec<f64> = xs.iter().chain(&ys).copied().collect();
            let (mean, m2) = two_pass(&all);
            prop_assert!((ab.mean() - mean).abs() <= 1e-9 * (1.0 + mean.abs()));
            prop_assert!((ab.m2() - m2).abs() <= 1e-9 * (1.0 + m2.abs()));
        }
    }
}
