//! Order-independent summaries and small regressions.

use serde::{Deserialize, Serialize};

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanSe {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                se: f64::NAN,
                n,
            };
        }
        let mean = pairwise_sum(xs) / n as f64;
        if n == 1 {
            return Self { mean, se: 0.0, n };
        }
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&dev) / (n - 1) as f64;
        Self {
            mean,
            se: (var / n as f64).sqrt(),
            n,
        }
    }

    /// |mean − target| in standard errors (infinite if the SE is zero and the gap is not).
    pub fn z_score(&self, target: f64) -> f64 {
        let gap = (self.mean - target).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.se
        }
    }
}

/// Ordinary least squares y ≈ a + b x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = pairwise_sum(x) / n as f64;
    let my = pairwise_sum(y) / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit {
        intercept: my - slope * mx,
        slope,
        r_squared,
    })
}

/// Fit y ≈ c·e^{−r t} by least squares on ln y over points with y > 0.
/// Returns (c, r).
pub fn exponential_fit(t: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let (ts, ls): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > 0.0 && v.is_finite())
        .map(|(&a, &v)| (a, v.ln()))
        .unzip();
    let fit = linear_fit(&ts, &ls)?;
    Some((fit.intercept.exp(), -fit.slope))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mean_and_se() {
        let m = MeanSe::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert_abs_diff_eq!(m.se, (5.0f64 / 3.0 / 4.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }

    #[test]
    fn fits() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert_abs_diff_eq!(f.slope, -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-14);
        let e: Vec<f64> = x.iter().map(|v| 3.0 * (-0.7 * v).exp()).collect();
        let (c, r) = exponential_fit(&x, &e).unwrap();
        assert_abs_diff_eq!(c, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r, 0.7, epsilon = 1e-12);
    }
}
