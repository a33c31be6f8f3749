use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::PanelDataset;
use crate::special::student_t_two_sided;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    /// Intercept, popularity, performance, interaction (in that order).
    pub coefficients: Vec<Coefficient>,
    pub n_obs: usize,
    pub residual_std_error: f64,
    pub r_squared: f64,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

/// Least-squares solution, residuals, and `(XᵀX)⁻¹`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub beta: DVector<f64>,
    pub residuals: DVector<f64>,
    pub xtx_inverse: DMatrix<f64>,
}

/// Solve `min ‖y - Xβ‖²` through a QR factorization.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LeastSquares> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(Error::invalid(format!(
            "design has {n} rows but response has {}",
            y.len()
        )));
    }
    if n < k {
        return Err(Error::SingularDesign(format!("{n} rows for {k} columns")));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if let Some(col) = (0..k).find(|&i| r[(i, i)].abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::SingularDesign(format!(
            "column {col} is linearly dependent on the others"
        )));
    }
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::SingularDesign("triangular solve failed".into()))?;
    let residuals = y - x * &beta;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::SingularDesign("triangular inverse failed".into()))?;
    let xtx_inverse = &r_inv * r_inv.transpose();
    Ok(LeastSquares {
        beta,
        residuals,
        xtx_inverse,
    })
}

/// Ordinary least squares of the daily change in popularity (new minus lost
/// mimickers) on popularity, performance and their product, with classical
/// two-sided t-test p-values.
pub fn ols_interaction_regression(panel: &PanelDataset) -> Result<RegressionResult> {
    let rows: Vec<_> = panel.rows().collect();
    let n = rows.len();
    if n < 5 {
        return Err(Error::invalid(format!("regression needs at least 5 rows, got {n}")));
    }
    let x = DMatrix::from_fn(n, 4, |i, j| {
        let p = rows[i].prev_popularity as f64;
        let q = rows[i].performance;
        match j {
            0 => 1.0,
            1 => p,
            2 => q,
            _ => p * q,
        }
    });
    let y = DVector::from_iterator(n, rows.iter().map(|r| r.net_change()));
    regression_from_design(&x, &y, &["intercept", "popularity", "performance", "interaction"])
}

pub fn regression_from_design(x: &DMatrix<f64>, y: &DVector<f64>, names: &[&str]) -> Result<RegressionResult> {
    let (n, k) = x.shape();
    if names.len() != k {
        return Err(Error::invalid("one name per design column is required"));
    }
    if n <= k {
        return Err(Error::invalid(format!(
            "{n} rows leave no residual degrees of freedom for {k} columns"
        )));
    }
    let fit = least_squares(x, y)?;
    let df = (n - k) as f64;
    let rss = fit.residuals.norm_squared();
    let sigma2 = rss / df;
    let mean_y = y.mean();
    let tss: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let coefficients = (0..k)
        .map(|j| {
            let estimate = fit.beta[j];
            let std_error = (sigma2 * fit.xtx_inverse[(j, j)]).sqrt();
            let t_value = if std_error > 0.0 {
                estimate / std_error
            } else if estimate == 0.0 {
                0.0
            } else {
                estimate.signum() * f64::INFINITY
            };
            Coefficient {
                name: names[j].to_string(),
                estimate,
                std_error,
                t_value,
                p_value: student_t_two_sided(t_value, df),
            }
        })
        .collect();
    Ok(RegressionResult {
        coefficients,
        n_obs: n,
        residual_std_error: sigma2.sqrt(),
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
    })
}
