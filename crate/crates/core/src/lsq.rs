//! Small dense least-squares fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Result of an ordinary least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual.
    pub rms: f64,
    /// Largest signed residual `y_i - ŷ_i`.
    pub max_residual: f64,
}

/// Minimizes `‖X β - y‖₂` where `rows[i]` is the regressor row of sample `i`.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<LinearFit> {
    let m = rows.len();
    let n = rows.first().map(Vec::len).unwrap_or(0);
    if m < n || n == 0 {
        return Err(Error::DegenerateFit(format!("{m} samples for {n} unknowns")));
    }
    let x = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    let rhs = DVector::from_column_slice(y);
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::DegenerateFit("regressors are linearly dependent".into()));
    }
    let beta = svd
        .solve(&rhs, 1e-14 * smax)
        .map_err(|e| Error::DegenerateFit(e.to_string()))?;
    let resid = &rhs - &x * &beta;
    let rms = (resid.iter().map(|r| r * r).sum::<f64>() / m as f64).sqrt();
    let max_residual = resid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(LinearFit {
        coefficients: beta.iter().cloned().collect(),
        rms,
        max_residual,
    })
}
