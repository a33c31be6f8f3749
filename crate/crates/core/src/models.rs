//! Choice-probability kernels.
//!
//! Every model family maps a [`MarketSnapshot`] (per-option popularity and
//! performance on one day) to the probability that a single decision-maker
//! commits to each option. Kernels that multiply likelihood-like factors are
//! evaluated in log space and normalized with a max shift, so large option
//! counts do not underflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Logistic arguments are clamped to this magnitude before exponentiation.
pub const LOGISTIC_CLAMP: f64 = 500.0;

/// Per-day popularity and performance of every active option.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSnapshot {
    pub day: u32,
    popularity: Vec<u64>,
    performance: Vec<f64>,
}

impl MarketSnapshot {
    pub fn new(day: u32, popularity: Vec<u64>, performance: Vec<f64>) -> Result<Self> {
        if popularity.is_empty() {
            return Err(Error::invalid("snapshot has no active options"));
        }
        if popularity.len() != performance.len() {
            return Err(Error::invalid(format!(
                "snapshot popularity has {} entries but performance has {}",
                popularity.len(),
                performance.len()
            )));
        }
        if let Some(i) = performance.iter().position(|q| !q.is_finite()) {
            return Err(Error::invalid(format!("performance of option {i} is not finite")));
        }
        Ok(Self {
            day,
            popularity,
            performance,
        })
    }

    pub fn popularity(&self) -> &[u64] {
        &self.popularity
    }

    pub fn performance(&self) -> &[f64] {
        &self.performance
    }

    pub fn active_count(&self) -> usize {
        self.popularity.len()
    }

    /// Binarized performance of every option.
    pub fn signals(&self) -> Vec<BinarySignal> {
        self.performance
            .iter()
            .map(|&q| BinarySignal::from_performance(q))
            .collect()
    }
}

/// A good (1) or bad (0) performance signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinarySignal(bool);

impl BinarySignal {
    pub const GOOD: Self = Self(true);
    pub const BAD: Self = Self(false);

    /// Strict positivity; callers must have checked finiteness.
    fn from_performance(q: f64) -> Self {
        Self(q > 0.0)
    }

    pub fn from_value(value: u8) -> Result<Self> {
        match value {
            0 => Ok(Self::BAD),
            1 => Ok(Self::GOOD),
            v => Err(Error::invalid(format!("binary signal must be 0 or 1, got {v}"))),
        }
    }

    pub fn is_good(self) -> bool {
        self.0
    }

    pub fn value(self) -> u8 {
        self.0 as u8
    }
}

impl From<bool> for BinarySignal {
    fn from(good: bool) -> Self {
        Self(good)
    }
}

/// `1` iff `q > 0`. Zero counts as a bad signal.
pub fn binarize_signal(q: f64) -> Result<BinarySignal> {
    if !q.is_finite() {
        return Err(Error::invalid(format!("performance {q} is not finite")));
    }
    Ok(BinarySignal::from_performance(q))
}

/// Smoothing term `1 / M` added to popularity so unpopular options keep
/// some chance of being chosen.
pub fn smoothing(active_count: usize) -> Result<f64> {
    if active_count == 0 {
        return Err(Error::invalid("smoothing needs at least one active option"));
    }
    Ok(1.0 / active_count as f64)
}

/// Model family without parameters; what `fit` is asked to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    SocialSampling,
    PerformanceRegression,
    FullRegression,
    Popularity,
    Performance,
    Additive,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 6] = [
        ModelFamily::SocialSampling,
        ModelFamily::Performance,
        ModelFamily::Additive,
        ModelFamily::Popularity,
        ModelFamily::FullRegression,
        ModelFamily::PerformanceRegression,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::SocialSampling => "social_sampling",
            ModelFamily::PerformanceRegression => "performance_regression",
            ModelFamily::FullRegression => "full_regression",
            ModelFamily::Popularity => "popularity",
            ModelFamily::Performance => "performance",
            ModelFamily::Additive => "additive",
        }
    }

    pub fn parameter_count(self) -> usize {
        match self {
            ModelFamily::Popularity => 0,
            ModelFamily::SocialSampling | ModelFamily::Performance => 1,
            ModelFamily::PerformanceRegression | ModelFamily::Additive => 2,
            ModelFamily::FullRegression => 4,
        }
    }
}

impl std::fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        ModelFamily::ALL
            .into_iter()
            .find(|f| f.name() == norm)
            .ok_or_else(|| Error::invalid(format!("unknown model family `{s}`")))
    }
}

/// A model family together with its parameter values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `θ_j ∝ η^r (1-η)^(1-r) · (p^γ + ε)`; `gamma = 1` is the canonical model.
    SocialSampling { eta: f64, gamma: f64 },
    /// `θ_j ∝ σ(β0 + β1 q)`
    PerformanceRegression { beta0: f64, beta1: f64 },
    /// `θ_j ∝ σ(β0 + β1 q + β2 p + β3 q p)`
    FullRegression {
        beta0: f64,
        beta1: f64,
        beta2: f64,
        beta3: f64,
    },
    /// `θ_j ∝ p + ε` (preferential attachment)
    Popularity,
    /// `θ_j ∝ η^r (1-η)^(1-r)`
    Performance { eta: f64 },
    /// Mixture of the normalized popularity share and the performance factor.
    Additive { alpha: f64, eta: f64 },
}

impl ModelSpec {
    pub fn social_sampling(eta: f64) -> Self {
        ModelSpec::SocialSampling { eta, gamma: 1.0 }
    }

    pub fn family(&self) -> ModelFamily {
        match self {
            ModelSpec::SocialSampling { .. } => ModelFamily::SocialSampling,
            ModelSpec::PerformanceRegression { .. } => ModelFamily::PerformanceRegression,
            ModelSpec::FullRegression { .. } => ModelFamily::FullRegression,
            ModelSpec::Popularity => ModelFamily::Popularity,
            ModelSpec::Performance { .. } => ModelFamily::Performance,
            ModelSpec::Additive { .. } => ModelFamily::Additive,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn check_eta(eta: f64) -> Result<()> {
            if eta > 0.5 && eta < 1.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("eta must lie in (0.5, 1), got {eta}")))
            }
        }
        fn check_finite(name: &str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite, got {v}")))
            }
        }
        match *self {
            ModelSpec::SocialSampling { eta, gamma } => {
                check_eta(eta)?;
                check_finite("gamma", gamma)?;
                if gamma < 0.0 {
                    return Err(Error::invalid(format!("gamma must be >= 0, got {gamma}")));
                }
                Ok(())
            }
            ModelSpec::PerformanceRegression { beta0, beta1 } => {
                check_finite("beta0", beta0)?;
                check_finite("beta1", beta1)
            }
            ModelSpec::FullRegression {
                beta0,
                beta1,
                beta2,
                beta3,
            } => {
                check_finite("beta0", beta0)?;
                check_finite("beta1", beta1)?;
                check_finite("beta2", beta2)?;
                check_finite("beta3", beta3)
            }
            ModelSpec::Popularity => Ok(()),
            ModelSpec::Performance { eta } => check_eta(eta),
            ModelSpec::Additive { alpha, eta } => {
                check_eta(eta)?;
                if (0.0..=1.0).contains(&alpha) {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")))
                }
            }
        }
    }
}

/// Normalized per-option probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    /// Normalize log-weights with a max shift. Entries of `-inf` get zero mass.
    pub fn from_log_weights(log_weights: &[f64]) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(Error::invalid("cannot normalize an empty weight vector"));
        }
        if let Some(index) = log_weights.iter().position(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::Numeric {
                index,
                message: format!("log-weight is {}", log_weights[index]),
            });
        }
        let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::Numeric {
                index: 0,
                message: "every option has zero weight".into(),
            });
        }
        let mut probs: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(Self(probs))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for ProbabilityVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// `ln(η^r (1-η)^(1-r))`
fn log_signal_factor(eta: f64, signal: BinarySignal) -> f64 {
    if signal.is_good() {
        eta.ln()
    } else {
        (1.0 - eta).ln()
    }
}

/// `ln σ(x)` after clamping, stable for large negative `x`.
fn log_logistic(x: f64) -> f64 {
    let x = x.clamp(-LOGISTIC_CLAMP, LOGISTIC_CLAMP);
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn regression_log_weight(index: usize, linear: f64) -> Result<f64> {
    if linear.is_nan() {
        return Err(Error::Numeric {
            index,
            message: "logistic argument is NaN".into(),
        });
    }
    Ok(log_logistic(linear))
}

/// Commit probabilities for every option under `model`.
pub fn decision_probabilities(model: &ModelSpec, snapshot: &MarketSnapshot) -> Result<ProbabilityVector> {
    decision_probabilities_with_smoothing(model, snapshot, smoothing(snapshot.active_count())?)
}

/// Same as [`decision_probabilities`] with an explicit smoothing term in
/// place of `1 / M`.
pub fn decision_probabilities_with_smoothing(
    model: &ModelSpec,
    snapshot: &MarketSnapshot,
    epsilon: f64,
) -> Result<ProbabilityVector> {
    ProbabilityVector::from_log_weights(&log_weights(model, snapshot, epsilon)?)
}

/// `ln θ_j` for every option, normalized in log space (no underflow to zero
/// for options far behind the leader).
pub fn log_decision_probabilities(model: &ModelSpec, snapshot: &MarketSnapshot) -> Result<Vec<f64>> {
    let mut w = log_weights(model, snapshot, smoothing(snapshot.active_count())?)?;
    if let Some(index) = w.iter().position(|x| x.is_nan() || *x == f64::INFINITY) {
        return Err(Error::Numeric {
            index,
            message: format!("log-weight is {}", w[index]),
        });
    }
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Numeric {
            index: 0,
            message: "every option has zero weight".into(),
        });
    }
    let log_total = max + w.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    w.iter_mut().for_each(|x| *x -= log_total);
    Ok(w)
}

/// Unnormalized log-weights of every option.
fn log_weights(model: &ModelSpec, snapshot: &MarketSnapshot, epsilon: f64) -> Result<Vec<f64>> {
    model.validate()?;
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::invalid(format!(
            "smoothing must be finite and >= 0, got {epsilon}"
        )));
    }
    let pop = snapshot.popularity();
    let perf = snapshot.performance();
    let log_weights: Vec<f64> = match *model {
        ModelSpec::SocialSampling { eta, gamma } => pop
            .iter()
            .zip(perf)
            .map(|(&p, &q)| {
                // powf(0, 0) == 1, so gamma = 0 gives every option the same factor
                let prior = (p as f64).powf(gamma) + epsilon;
                log_signal_factor(eta, BinarySignal::from_performance(q)) + prior.ln()
            })
            .collect(),
        ModelSpec::Popularity => pop.iter().map(|&p| (p as f64 + epsilon).ln()).collect(),
        ModelSpec::Performance { eta } => perf
            .iter()
            .map(|&q| log_signal_factor(eta, BinarySignal::from_performance(q)))
            .collect(),
        ModelSpec::PerformanceRegression { beta0, beta1 } => perf
            .iter()
            .enumerate()
            .map(|(i, &q)| regression_log_weight(i, beta0 + beta1 * q))
            .collect::<Result<_>>()?,
        ModelSpec::FullRegression {
            beta0,
            beta1,
            beta2,
            beta3,
        } => pop
            .iter()
            .zip(perf)
            .enumerate()
            .map(|(i, (&p, &q))| {
                let p = p as f64;
                regression_log_weight(i, beta0 + beta1 * q + beta2 * p + beta3 * q * p)
            })
            .collect::<Result<_>>()?,
        ModelSpec::Additive { alpha, eta } => {
            let total: f64 = pop.iter().map(|&p| p as f64 + epsilon).sum();
            pop.iter()
                .zip(perf)
                .map(|(&p, &q)| {
                    let share = (p as f64 + epsilon) / total;
                    let signal = log_signal_factor(eta, BinarySignal::from_performance(q)).exp();
                    (alpha * share + (1.0 - alpha) * signal).ln()
                })
                .collect()
        }
    };
    Ok(log_weights)
}

/// Exact posterior over which option is best under the needle-in-haystack
/// reward model: the best option emits a good signal with probability `eta`,
/// every other option with probability 1/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorState {
    log_weights: Vec<f64>,
    eta: f64,
}

impl PosteriorState {
    /// Uniform prior over `option_count` options.
    pub fn uniform(option_count: usize, eta: f64) -> Result<Self> {
        if option_count == 0 {
            return Err(Error::invalid("posterior needs at least one option"));
        }
        if !(eta > 0.5 && eta < 1.0) {
            return Err(Error::invalid(format!("eta must lie in (0.5, 1), got {eta}")));
        }
        Ok(Self {
            log_weights: vec![0.0; option_count],
            eta,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn option_count(&self) -> usize {
        self.log_weights.len()
    }

    fn log_ratio_good(&self) -> f64 {
        (self.eta / 0.5).ln()
    }

    fn log_ratio_bad(&self) -> f64 {
        ((1.0 - self.eta) / 0.5).ln()
    }

    /// Bayes update with one signal per option.
    pub fn update(&self, signals: &[BinarySignal]) -> Result<Self> {
        let mut next = self.clone();
        next.update_in_place(signals)?;
        Ok(next)
    }

    pub fn update_in_place(&mut self, signals: &[BinarySignal]) -> Result<()> {
        if signals.len() != self.log_weights.len() {
            return Err(Error::invalid(format!(
                "posterior has {} options but {} signals were given",
                self.log_weights.len(),
                signals.len()
            )));
        }
        let (good, bad) = (self.log_ratio_good(), self.log_ratio_bad());
        for (w, s) in self.log_weights.iter_mut().zip(signals) {
            *w += if s.is_good() { good } else { bad };
        }
        Ok(())
    }

    /// Batch update from per-option counts of good and bad signals.
    pub fn update_counts(&self, good: &[u64], bad: &[u64]) -> Result<Self> {
        if good.len() != self.log_weights.len() || bad.len() != self.log_weights.len() {
            return Err(Error::invalid("signal count vectors must match the option count"));
        }
        let (lg, lb) = (self.log_ratio_good(), self.log_ratio_bad());
        let log_weights = self
            .log_weights
            .iter()
            .zip(good.iter().zip(bad))
            .map(|(w, (&g, &b))| w + g as f64 * lg + b as f64 * lb)
            .collect();
        Ok(Self {
            log_weights,
            eta: self.eta,
        })
    }

    pub fn probabilities(&self) -> ProbabilityVector {
        ProbabilityVector::from_log_weights(&self.log_weights).expect("posterior log-weights are finite")
    }
}

pub fn posterior_init(option_count: usize, eta: f64) -> Result<PosteriorState> {
    PosteriorState::uniform(option_count, eta)
}

pub fn posterior_update(state: &PosteriorState, signals: &[BinarySignal]) -> Result<PosteriorState> {
    state.update(signals)
}

/// Commit probability for real-valued rewards: `(1/C) · L_best / L_other`,
/// where `C` bounds the likelihood ratio from above.
pub fn generalized_commit_probability(likelihood_best: f64, likelihood_other: f64, ratio_bound: f64) -> Result<f64> {
    for (name, v) in [
        ("likelihood_best", likelihood_best),
        ("likelihood_other", likelihood_other),
        ("ratio_bound", ratio_bound),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")));
        }
    }
    let ratio = likelihood_best / likelihood_other;
    // tolerate rounding when the ratio sits exactly at the bound
    if ratio > ratio_bound * (1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::invalid(format!(
            "likelihood ratio {ratio} exceeds the bound {ratio_bound}"
        )));
    }
    Ok((ratio / ratio_bound).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn snap(pop: &[u64], perf: &[f64]) -> MarketSnapshot {
        MarketSnapshot::new(0, pop.to_vec(), perf.to_vec()).unwrap()
    }

    fn assert_probs(actual: &ProbabilityVector, expected: &[f64]) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.as_slice().iter().zip(expected) {
            assert_abs_diff_eq!(*a, *e, epsilon = 1e-12);
        }
    }

    #[test]
    fn binarize_is_strict() {
        assert_eq!(binarize_signal(0.03).unwrap().value(), 1);
        assert_eq!(binarize_signal(0.0).unwrap().value(), 0);
        assert_eq!(binarize_signal(-0.01).unwrap().value(), 0);
        assert!(binarize_signal(f64::NAN).is_err());
        assert!(binarize_signal(f64::INFINITY).is_err());
    }

    #[test]
    fn smoothing_values() {
        assert_eq!(smoothing(1).unwrap(), 1.0);
        assert_eq!(smoothing(2).unwrap(), 0.5);
        assert_eq!(smoothing(1000).unwrap(), 0.001);
        assert!(smoothing(0).is_err());
    }

    #[test]
    fn snapshot_validation() {
        assert!(MarketSnapshot::new(0, vec![], vec![]).is_err());
        assert!(MarketSnapshot::new(0, vec![1, 2], vec![0.1]).is_err());
        assert!(MarketSnapshot::new(0, vec![1], vec![f64::NAN]).is_err());
    }

    #[test]
    fn social_sampling_closed_form() {
        // numerators 0.75 * 3.5 and 0.25 * 1.5
        let p = decision_probabilities(&ModelSpec::social_sampling(0.75), &snap(&[3, 1], &[0.1, -0.1])).unwrap();
        let (a, b) = (0.75 * 3.5, 0.25 * 1.5);
        assert_probs(&p, &[a / (a + b), b / (a + b)]);
        assert_probs(&p, &[0.875, 0.125]);

        let p = decision_probabilities(&ModelSpec::social_sampling(0.75), &snap(&[5, 5], &[0.1, 0.1])).unwrap();
        assert_probs(&p, &[0.5, 0.5]);
    }

    #[test]
    fn popularity_closed_form() {
        let p = decision_probabilities(&ModelSpec::Popularity, &snap(&[1, 3], &[9.0, -2.0])).unwrap();
        assert_probs(&p, &[0.3, 0.7]);
    }

    #[test]
    fn performance_closed_form() {
        let p = decision_probabilities(
            &ModelSpec::Performance { eta: 0.8 },
            &snap(&[7, 0, 2], &[0.2, -0.3, -0.1]),
        )
        .unwrap();
        assert_probs(&p, &[2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]);
    }

    #[test]
    fn additive_closed_form() {
        let p = decision_probabilities(
            &ModelSpec::Additive { alpha: 0.5, eta: 0.75 },
            &snap(&[1, 0], &[-0.1, 0.2]),
        )
        .unwrap();
        assert_probs(&p, &[0.5, 0.5]);
    }

    #[test]
    fn zero_regression_is_uniform() {
        let model = ModelSpec::FullRegression {
            beta0: 0.0,
            beta1: 0.0,
            beta2: 0.0,
            beta3: 0.0,
        };
        let p = decision_probabilities(&model, &snap(&[0, 4, 100, 2], &[0.3, -1.0, 0.0, 2.0])).unwrap();
        assert_probs(&p, &[0.25; 4]);
    }

    #[test]
    fn extreme_logits_stay_finite() {
        let model = ModelSpec::FullRegression {
            beta0: 0.0,
            beta1: 1e6,
            beta2: 0.0,
            beta3: 0.0,
        };
        let p = decision_probabilities(&model, &snap(&[0, 5000], &[-1.0, 1.0])).unwrap();
        assert!(p[1] > 0.999_999);
        let model = ModelSpec::PerformanceRegression {
            beta0: -1e300,
            beta1: 0.0,
        };
        let p = decision_probabilities(&model, &snap(&[1, 2], &[0.1, 0.2])).unwrap();
        assert_probs(&p, &[0.5, 0.5]);
    }

    #[test]
    fn bounds_are_enforced() {
        let s = snap(&[1], &[0.1]);
        assert!(decision_probabilities(&ModelSpec::social_sampling(0.5), &s).is_err());
        assert!(decision_probabilities(&ModelSpec::social_sampling(1.0), &s).is_err());
        assert!(decision_probabilities(&ModelSpec::SocialSampling { eta: 0.7, gamma: -1.0 }, &s).is_err());
        assert!(decision_probabilities(&ModelSpec::Additive { alpha: 1.5, eta: 0.7 }, &s).is_err());
        assert!(decision_probabilities(
            &ModelSpec::PerformanceRegression {
                beta0: f64::NAN,
                beta1: 0.0
            },
            &s
        )
        .is_err());
    }

    #[test]
    fn log_probabilities_agree() {
        let s = snap(&[0, 10, 3, 7], &[0.5, -0.5, 0.0, 0.2]);
        for model in [
            ModelSpec::social_sampling(0.8),
            ModelSpec::Popularity,
            ModelSpec::Additive { alpha: 0.3, eta: 0.6 },
            ModelSpec::FullRegression {
                beta0: 0.1,
                beta1: 2.0,
                beta2: -0.3,
                beta3: 0.5,
            },
        ] {
            let p = decision_probabilities(&model, &s).unwrap();
            let lp = log_decision_probabilities(&model, &s).unwrap();
            for (a, b) in p.as_slice().iter().zip(&lp) {
                assert_abs_diff_eq!(a.ln(), *b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gamma_zero_ignores_popularity() {
        let s = snap(&[0, 10, 3], &[0.5, -0.5, 0.0]);
        let scaled = decision_probabilities(&ModelSpec::SocialSampling { eta: 0.7, gamma: 0.0 }, &s).unwrap();
        let perf = decision_probabilities(&ModelSpec::Performance { eta: 0.7 }, &s).unwrap();
        assert_probs(&scaled, perf.as_slice());
    }

    #[test]
    fn posterior_examples() {
        let u = posterior_init(4, 0.7).unwrap();
        assert_probs(&u.probabilities(), &[0.25; 4]);
        assert_probs(&posterior_init(1, 0.9).unwrap().probabilities(), &[1.0]);
        assert_probs(&posterior_init(2, 0.6).unwrap().probabilities(), &[0.5, 0.5]);
        assert!(posterior_init(0, 0.7).is_err());
        assert!(posterior_init(2, 0.5).is_err());

        let signals = [BinarySignal::GOOD, BinarySignal::BAD];
        let once = posterior_update(&posterior_init(2, 0.75).unwrap(), &signals).unwrap();
        assert_probs(&once.probabilities(), &[0.75, 0.25]);
        let twice = posterior_update(&once, &signals).unwrap();
        assert_probs(&twice.probabilities(), &[0.9, 0.1]);

        let same = posterior_update(&once, &[BinarySignal::GOOD; 2]).unwrap();
        assert_probs(&same.probabilities(), once.probabilities().as_slice());
        assert!(posterior_update(&once, &[BinarySignal::GOOD]).is_err());
    }

    #[test]
    fn generalized_commit_examples() {
        assert_abs_diff_eq!(
            generalized_commit_probability(0.75, 0.5, 1.5).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            generalized_commit_probability(0.25, 0.5, 1.5).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            generalized_commit_probability(0.5, 0.5, 1.5).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-15
        );
        assert!(generalized_commit_probability(0.9, 0.5, 1.5).is_err());
        assert!(generalized_commit_probability(0.0, 0.5, 1.5).is_err());
    }

    #[test]
    fn family_parsing() {
        for f in ModelFamily::ALL {
            assert_eq!(f.name().parse::<ModelFamily>().unwrap(), f);
        }
        assert_eq!(
            "Social-Sampling".parse::<ModelFamily>().unwrap(),
            ModelFamily::SocialSampling
        );
        assert!("nope".parse::<ModelFamily>().is_err());
    }

    #[test]
    fn model_spec_json_shape() {
        let json = serde_json::to_string(&ModelSpec::Additive { alpha: 0.25, eta: 0.75 }).unwrap();
        assert_eq!(json, r#"{"family":"additive","alpha":0.25,"eta":0.75}"#);
        let back: ModelSpec = serde_json::from_str(r#"{"family":"popularity"}"#).unwrap();
        assert_eq!(back, ModelSpec::Popularity);
    }
}
