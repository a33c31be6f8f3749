//! Maximum-likelihood fitting of the choice models to panel data, the
//! popularity-exponent profile, trader ranking, and Beta credible intervals.

mod fit;
mod skill;

pub use fit::{fit, fit_with, gamma_profile, FitOptions, FitResult, ProfilePoint};
pub use skill::{rank_traders, skill_credible_interval, CredibleInterval, TraderScore};

use crate::error::{Error, Result};
use crate::models::{decision_probabilities, log_decision_probabilities, MarketSnapshot, ModelSpec};
use crate::panel::PanelDataset;

/// `Σ_t Σ_j n_{j,t} ln θ_{j,t}` over the panel's scored rows.
///
/// Returns `-inf` (not an error) when some option with new mimickers has
/// zero probability, so optimizers can back away from such parameters.
pub fn log_likelihood(model: &ModelSpec, panel: &PanelDataset) -> Result<f64> {
    model.validate()?;
    let mut total = 0.0;
    for day in panel.days() {
        let has_decisions = day.new_mimickers.iter().zip(&day.scored).any(|(&n, &s)| s && n > 0);
        if !has_decisions {
            continue;
        }
        let log_theta = log_decision_probabilities(model, &day.snapshot)?;
        for ((&n, &scored), lt) in day.new_mimickers.iter().zip(&day.scored).zip(&log_theta) {
            if !scored || n == 0 {
                continue;
            }
            if *lt == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            total += n as f64 * lt;
        }
    }
    Ok(total)
}

/// Expected new mimickers per option: `θ_j · total_new`.
pub fn expected_new_mimickers(model: &ModelSpec, snapshot: &MarketSnapshot, total_new: u64) -> Result<Vec<f64>> {
    let theta = decision_probabilities(model, snapshot)?;
    Ok(theta.as_slice().iter().map(|t| t * total_new as f64).collect())
}

/// Expected new mimickers for every scored row of `panel`, in row order,
/// using each day's actual total over all active users.
pub fn predict_panel(model: &ModelSpec, panel: &PanelDataset) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(panel.scored_rows());
    for day in panel.days() {
        let expected = expected_new_mimickers(model, &day.snapshot, day.total_new())?;
        out.extend(
            expected
                .into_iter()
                .zip(&day.scored)
                .filter(|(_, &s)| s)
                .map(|(e, _)| e),
        );
    }
    Ok(out)
}

pub(crate) fn require_decisions(panel: &PanelDataset) -> Result<()> {
    if panel.has_decisions() {
        Ok(())
    } else {
        Err(Error::invalid("panel has no day with new mimickers; nothing to fit"))
    }
}
