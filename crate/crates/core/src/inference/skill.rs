use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::beta_quantile;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraderScore {
    pub user_id: u64,
    /// Positive-profit days minus negative-profit days.
    pub score: i64,
    pub positive_days: u64,
    pub negative_days: u64,
}

/// Rank users by evidence of skill: days with positive profit minus days with
/// negative profit. Zero-profit days count for neither side. Ties go to the
/// smaller user ID.
pub fn rank_traders(daily_profits: &BTreeMap<u64, Vec<f64>>) -> Vec<TraderScore> {
    let mut scores: Vec<TraderScore> = daily_profits
        .iter()
        .map(|(&user_id, profits)| {
            let positive_days = profits.iter().filter(|&&p| p > 0.0).count() as u64;
            let negative_days = profits.iter().filter(|&&p| p < 0.0).count() as u64;
            TraderScore {
                user_id,
                score: positive_days as i64 - negative_days as i64,
                positive_days,
                negative_days,
            }
        })
        .collect();
    scores.sort_by(|a, b| b.score.cmp(&a.score).then(a.user_id.cmp(&b.user_id)));
    scores
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CredibleInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl CredibleInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Equal-tailed credible interval for a Bernoulli success rate under a
/// uniform prior, i.e. quantiles of Beta(successes + 1, failures + 1).
pub fn skill_credible_interval(successes: u64, failures: u64, level: f64) -> Result<CredibleInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!(
            "credible level must lie in (0, 1), got {level}"
        )));
    }
    let a = successes as f64 + 1.0;
    let b = failures as f64 + 1.0;
    let tail = (1.0 - level) / 2.0;
    Ok(CredibleInterval {
        lower: beta_quantile(a, b, tail)?,
        upper: beta_quantile(a, b, 1.0 - tail)?,
        level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_rules() {
        let mut profits = BTreeMap::new();
        profits.insert(7, vec![1.0, 2.0, -1.0]);
        profits.insert(3, vec![0.0, 0.0]);
        profits.insert(1, vec![1.0, 1.0]);
        profits.insert(2, vec![5.0]);
        profits.insert(9, vec![5.0]);
        let ranked = rank_traders(&profits);
        let order: Vec<(u64, i64)> = ranked.iter().map(|s| (s.user_id, s.score)).collect();
        assert_eq!(order, vec![(1, 2), (2, 1), (7, 1), (9, 1), (3, 0)]);
    }

    #[test]
    fn uniform_prior_interval() {
        let ci = skill_credible_interval(0, 0, 0.95).unwrap();
        assert!((ci.lower - 0.025).abs() < 1e-9);
        assert!((ci.upper - 0.975).abs() < 1e-9);
    }

    #[test]
    fn invalid_levels() {
        for level in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(skill_credible_interval(3, 4, level).is_err());
        }
    }

    #[test]
    fn large_counts_match_normal_approximation() {
        let ci = skill_credible_interval(1000, 1000, 0.95).unwrap();
        let sd = (0.25f64 / 2003.0).sqrt();
        assert!((ci.width() - 2.0 * 1.959_964 * sd).abs() < 1e-3, "{ci:?}");
        assert!(((ci.lower + ci.upper) / 2.0 - 0.5).abs() < 1e-6);
    }
}
