//! Tabulated inverse-CDF sampling for one-dimensional laws without a
//! closed-form quantile function.

/// Monotone table of `(x, F(x))` pairs, inverted by linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseCdfTable {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdfTable {
    /// Builds the table from an unnormalized density on `[lo, hi]` sampled at
    /// `points` equally spaced abscissae (trapezoid accumulation).
    pub fn from_density<F: Fn(f64) -> f64>(density: F, lo: f64, hi: f64, points: usize) -> Self {
        assert!(points >= 2 && hi > lo);
        let step = (hi - lo) / (points - 1) as f64;
        let xs: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
        let fs: Vec<f64> = xs.iter().map(|&x| density(x).max(0.0)).collect();
        Self::from_values(xs, &fs)
    }

    /// Builds the table from density values at arbitrary increasing abscissae.
    pub fn from_values(xs: Vec<f64>, density: &[f64]) -> Self {
        assert_eq!(xs.len(), density.len());
        let mut cdf = Vec::with_capacity(xs.len());
        cdf.push(0.0);
        for i in 1..xs.len() {
            let area = 0.5 * (density[i] + density[i - 1]) * (xs[i] - xs[i - 1]);
            cdf.push(cdf[i - 1] + area);
        }
        let total = *cdf.last().expect("nonempty");
        assert!(total > 0.0, "density has no mass on the table range");
        for c in &mut cdf {
            *c /= total;
        }
        Self { xs, cdf }
    }

    /// Quantile for `u` in `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let idx = self.cdf.partition_point(|&c| c < u);
        if idx == 0 {
            return self.xs[0];
        }
        if idx >= self.xs.len() {
            return *self.xs.last().expect("nonempty");
        }
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        let (x0, x1) = (self.xs[idx - 1], self.xs[idx]);
        if c1 <= c0 {
            return x0;
        }
        x0 + (u - c0) / (c1 - c0) * (x1 - x0)
    }

    pub fn lower(&self) -> f64 {
        self.xs[0]
    }

    pub fn upper(&self) -> f64 {
        *self.xs.last().expect("nonempty")
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_density_gives_identity_quantile() {
        let t = InverseCdfTable::from_density(|_| 1.0, 0.0, 1.0, 101);
        for &u in &[0.0, 0.1, 0.5, 0.93, 1.0] {
            assert!((t.quantile(u) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn quantile_is_monotone() {
        let t = InverseCdfTable::from_density(|x| (-x * x).exp(), -5.0, 5.0, 4096);
        let qs: Vec<f64> = (0..=100).map(|i| t.quantile(i as f64 / 100.0)).collect();
        assert!(qs.windows(2).all(|w| w[0] <= w[1]));
        assert!(t.quantile(0.5).abs() < 1e-3);
    }
}
