//! Growth-curve fitting for the phase-transition sweep.
//!
//! Both models are fitted to the raw means (not their logarithms) so their
//! residual sums of squares are comparable.

use nalgebra::{DMatrix, DVector};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialFit {
    /// Lowest degree first.
    pub coefficients: Vec<f64>,
    pub rss: f64,
}

/// `y = a * exp(k * x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialFit {
    pub a: f64,
    pub k: f64,
    pub rss: f64,
}

fn check(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(BenchError::Argument("x and y differ in length".into()));
    }
    if x.len() < min {
        return Err(BenchError::Argument(format!("need at least {min} points")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(BenchError::Argument("non-finite data".into()));
    }
    Ok(())
}

pub fn polynomial_fit(x: &[f64], y: &[f64], degree: usize) -> Result<PolynomialFit> {
    check(x, y, degree + 1)?;
    let a = DMatrix::from_fn(x.len(), degree + 1, |i, j| x[i].powi(j as i32));
    let b = DVector::from_column_slice(y);
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| BenchError::Argument(e.to_string()))?;
    let rss = (&a * &coef - &b).norm_squared();
    Ok(PolynomialFit {
        coefficients: coef.iter().copied().collect(),
        rss,
    })
}

/// Least-squares line `(intercept, slope)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let f = polynomial_fit(x, y, 1)?;
    Ok((f.coefficients[0], f.coefficients[1]))
}

fn exp_rss(x: &[f64], y: &[f64], a: f64, k: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| (a * (k * xi).exp() - yi).powi(2))
        .sum()
}

/// Damped Gauss-Newton from the log-linear fit. `y` must be positive.
pub fn exponential_fit(x: &[f64], y: &[f64]) -> Result<ExponentialFit> {
    check(x, y, 2)?;
    if y.iter().any(|&v| v <= 0.0) {
        return Err(BenchError::Argument("exponential fit needs positive y".into()));
    }
    let logs: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (c, mut k) = linear_fit(x, &logs)?;
    let mut a = c.exp();
    let mut rss = exp_rss(x, y, a, k);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let j = DMatrix::from_fn(x.len(), 2, |i, col| {
            let e = (k * x[i]).exp();
            if col == 0 {
                e
            } else {
                a * x[i] * e
            }
        });
        let r = DVector::from_fn(x.len(), |i, _| y[i] - a * (k * x[i]).exp());
        let jt = j.transpose();
        let g = &jt * &r;
        let mut accepted = false;
        for _ in 0..30 {
            let mut h = &jt * &j;
            for d in 0..2 {
                h[(d, d)] *= 1.0 + lambda;
            }
            let Some(step) = h.lu().solve(&g) else {
                lambda *= 10.0;
                continue;
            };
            let (na, nk) = (a + step[0], k + step[1]);
            let nrss = exp_rss(x, y, na, nk);
            if nrss.is_finite() && nrss < rss {
                let gain = rss - nrss;
                (a, k, rss) = (na, nk, nrss);
                lambda = (lambda / 10.0).max(1e-12);
                accepted = gain > 1e-12 * rss.max(1e-300);
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    Ok(ExponentialFit { a, k, rss })
}

/// Summary used to classify a growth curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthComparison {
    /// Slope of `ln y` against `x`.
    pub log_slope: f64,
    pub exponential_rss: f64,
    pub quadratic_rss: f64,
}

impl GrowthComparison {
    pub fn exponential_wins(&self) -> bool {
        self.exponential_rss < self.quadratic_rss
    }
}

pub fn compare_growth(x: &[f64], y: &[f64]) -> Result<GrowthComparison> {
    let logs: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Ok(GrowthComparison {
        log_slope: linear_fit(x, &logs)?.1,
        exponential_rss: exponential_fit(x, y)?.rss,
        quadratic_rss: polynomial_fit(x, y, 2)?.rss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_models() {
        let x: Vec<f64> = (0..10).map(|v| v as f64).collect();
        let quad: Vec<f64> = x.iter().map(|v| 2.0 - v + 0.5 * v * v).collect();
        let f = polynomial_fit(&x, &quad, 2).unwrap();
        for (c, e) in f.coefficients.iter().zip([2.0, -1.0, 0.5]) {
            assert!((c - e).abs() < 1e-9);
        }
        let exp: Vec<f64> = x.iter().map(|v| 3.0 * (0.4 * v).exp()).collect();
        let g = exponential_fit(&x, &exp).unwrap();
        assert!((g.a - 3.0).abs() < 1e-6 && (g.k - 0.4).abs() < 1e-8, "{g:?}");
        assert!(compare_growth(&x, &exp).unwrap().exponential_wins());
        assert!(!compare_growth(&x, &quad.iter().map(|v| v + 10.0).collect::<Vec<_>>())
            .unwrap()
            .exponential_wins());
    }

    #[test]
    fn nls_improves_on_log_linear() {
        let x: Vec<f64> = (0..8).map(|v| v as f64).collect();
        let y = [1.0, 2.5, 3.9, 8.5, 15.0, 33.0, 61.0, 130.0];
        let logs: Vec<f64> = y.iter().map(|v: &f64| v.ln()).collect();
        let (c, k) = linear_fit(&x, &logs).unwrap();
        let g = exponential_fit(&x, &y).unwrap();
        assert!(g.rss <= exp_rss(&x, &y, c.exp(), k));
    }
}
