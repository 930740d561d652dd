//! Weighted least squares with heteroscedasticity-robust (HC0 sandwich)
//! standard errors.

use nalgebra::{DMatrix, DVector};

use crate::error::{GlpError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
}

impl LinearFit {
    pub fn z(&self, j: usize) -> f64 {
        self.coef[j] / self.se[j]
    }
}

/// Fits `y ≈ X β`, where `design` holds the rows of `X` (include a column
/// of ones for an intercept). With `weights` this is weighted least squares
/// and the sandwich uses `Σ w² e² x xᵀ`.
pub fn ols(design: &[Vec<f64>], y: &[f64], weights: Option<&[f64]>) -> Result<LinearFit> {
    let n = design.len();
    let p = design.first().map_or(0, |r| r.len());
    if n != y.len() || weights.is_some_and(|w| w.len() != n) {
        return Err(GlpError::domain("ols", "design, response and weights differ in length"));
    }
    if n <= p || p == 0 {
        return Err(GlpError::InsufficientData {
            op: "ols",
            detail: format!("{n} rows for {p} coefficients"),
        });
    }
    let x = DMatrix::from_fn(n, p, |i, j| design[i][j]);
    let w = DVector::from_fn(n, |i, _| weights.map_or(1.0, |w| w[i]));
    let yv = DVector::from_column_slice(y);
    let xw = DMatrix::from_fn(n, p, |i, j| x[(i, j)] * w[i]);
    let bread = (xw.transpose() * &x)
        .try_inverse()
        .ok_or_else(|| GlpError::Numerical {
            op: "ols",
            detail: "singular design".into(),
        })?;
    let beta = &bread * (xw.transpose() * &yv);
    let resid = &yv - &x * &beta;
    let mut meat = DMatrix::zeros(p, p);
    for i in 0..n {
        let s = w[i] * resid[i];
        let row = x.row(i);
        meat += s * s * row.transpose() * row;
    }
    let cov = &bread * meat * &bread;
    Ok(LinearFit {
        coef: beta.iter().copied().collect(),
        se: (0..p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let design: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| 2.0 + 0.5 * i as f64).collect();
        let fit = ols(&design, &y, None).unwrap();
        assert!((fit.coef[0] - 2.0).abs() < 1e-12 && (fit.coef[1] - 0.5).abs() < 1e-12);
        assert!(fit.se[1] < 1e-10);
    }

    #[test]
    fn hc0_matches_hand_formula() {
        // Slope-only regression through the origin: se² = Σ x² e² / (Σ x²)².
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [1.1, 1.9, 3.2, 3.9];
        let design: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let fit = ols(&design, &ys, None).unwrap();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let b: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / sxx;
        let meat: f64 = xs.iter().zip(&ys).map(|(x, y)| (x * (y - b * x)).powi(2)).sum();
        assert!((fit.coef[0] - b).abs() < 1e-14);
        assert!((fit.se[0] - meat.sqrt() / sxx).abs() < 1e-14);
    }
}
