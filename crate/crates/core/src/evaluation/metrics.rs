use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub mae: f64,
    pub mse: f64,
    pub f_score: f64,
}

/// Round to the nearest whole number, halves up.
pub fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Mean absolute error, mean squared error and F1 for predicting whether a
/// user gains any new mimickers.
///
/// A prediction counts as positive when it rounds (half up) to more than
/// zero. With no true positives, precision and recall are zero and so is F1.
pub fn error_metrics(predicted: &[f64], actual: &[u64]) -> Result<ErrorMetrics> {
    if predicted.len() != actual.len() {
        return Err(Error::invalid(format!(
            "{} predictions but {} observations",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::invalid("error metrics need at least one row"));
    }
    let n = predicted.len() as f64;
    let (mut abs, mut sq) = (0.0, 0.0);
    let (mut tp, mut fp, mut fneg) = (0u64, 0u64, 0u64);
    for (&p, &a) in predicted.iter().zip(actual) {
        let r = p - a as f64;
        abs += r.abs();
        sq += r * r;
        match (round_half_up(p) > 0.0, a > 0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
    let recall = if tp + fneg > 0 {
        tp as f64 / (tp + fneg) as f64
    } else {
        0.0
    };
    let f_score = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(ErrorMetrics {
        mae: abs / n,
        mse: sq / n,
        f_score,
    })
}

/// Fraction of rows where the model's absolute residual strictly exceeds the
/// baseline's. Ties count for neither.
pub fn relative_error(model_residuals: &[f64], baseline_residuals: &[f64]) -> Result<f64> {
    if model_residuals.len() != baseline_residuals.len() {
        return Err(Error::invalid(format!(
            "residual vectors differ in length ({} vs {})",
            model_residuals.len(),
            baseline_residuals.len()
        )));
    }
    if model_residuals.is_empty() {
        return Err(Error::invalid("relative error needs at least one residual"));
    }
    let larger = model_residuals
        .iter()
        .zip(baseline_residuals)
        .filter(|(m, b)| m > b)
        .count();
    Ok(larger as f64 / model_residuals.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hand_fixture() {
        let m = error_metrics(&[0.6, 0.2, 1.4], &[1, 0, 0]).unwrap();
        assert_abs_diff_eq!(m.mae, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.mse, 0.72, epsilon = 1e-12);
        assert_abs_diff_eq!(m.f_score, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn perfect_and_degenerate() {
        let m = error_metrics(&[0.0, 2.0, 1.0], &[0, 2, 1]).unwrap();
        assert_eq!((m.mae, m.mse, m.f_score), (0.0, 0.0, 1.0));
        let m = error_metrics(&[0.4, 0.4], &[0, 0]).unwrap();
        assert_eq!(m.f_score, 0.0);
        assert!(error_metrics(&[1.0], &[1, 2]).is_err());
        assert!(error_metrics(&[], &[]).is_err());
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(round_half_up(0.5), 1.0);
        assert_eq!(round_half_up(0.499_999), 0.0);
        assert_eq!(round_half_up(2.5), 3.0);
        let m = error_metrics(&[0.5], &[1]).unwrap();
        assert_eq!(m.f_score, 1.0);
    }

    #[test]
    fn relative_error_fixtures() {
        assert_eq!(relative_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(relative_error(&[2.0, 2.0, 2.0], &[1.0, 3.0, 1.0]).unwrap(), 2.0 / 3.0);
        assert_eq!(relative_error(&[0.1, 0.2], &[1.0, 3.0]).unwrap(), 0.0);
        assert!(relative_error(&[1.0], &[]).is_err());
    }
}
