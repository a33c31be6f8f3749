//! Idealized multi-agent environment.
//!
//! `M` options each emit a Bernoulli reward every round: the best option
//! (index 0) at rate `η*`, the others at 1/2. Every round each of `N` agents
//! considers one option with probability proportional to `p^γ + 1/M`, where
//! `p` is last round's commit count, and then commits with probability `η` if
//! that option's last reward was good or `1 - η` if it was bad. Agents that
//! do not commit abstain for the round.
//!
//! Agents act independently given the previous round, so the per-option
//! consideration counts are multinomial and the commit counts binomial; the
//! simulator samples those counts directly rather than looping over agents.

mod sweep;

pub use sweep::{run_sweep, SweepGrid, SweepRow, SweepTable, DEFAULT_MAX_CELLS};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{BinarySignal, PosteriorState};
use crate::rng::{self, SimRng};

/// Index of the option with the higher reward rate.
pub const BEST_OPTION: usize = 0;

fn default_cost() -> f64 {
    0.5
}

fn default_repetitions() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_agents: u64,
    pub n_options: usize,
    pub n_rounds: usize,
    /// Reward rate of the best option, `η*`.
    pub true_best_rate: f64,
    /// The agents' belief about the best option's rate, `η`. 0.5 means
    /// performance is ignored.
    pub assumed_best_rate: f64,
    pub gamma: f64,
    #[serde(default = "default_cost")]
    pub cost: f64,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub unfollow_enabled: bool,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 || self.n_options == 0 || self.n_rounds == 0 {
            return Err(Error::invalid(format!(
                "n_agents, n_options and n_rounds must be positive (got {}, {}, {})",
                self.n_agents, self.n_options, self.n_rounds
            )));
        }
        if !(self.true_best_rate > 0.5 && self.true_best_rate < 1.0) {
            return Err(Error::invalid(format!(
                "true_best_rate must lie in (0.5, 1), got {}",
                self.true_best_rate
            )));
        }
        if !(self.assumed_best_rate >= 0.5 && self.assumed_best_rate < 1.0) {
            return Err(Error::invalid(format!(
                "assumed_best_rate must lie in [0.5, 1), got {}",
                self.assumed_best_rate
            )));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::invalid(format!(
                "gamma must be finite and >= 0, got {}",
                self.gamma
            )));
        }
        if !self.cost.is_finite() {
            return Err(Error::invalid("cost must be finite"));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be positive"));
        }
        Ok(())
    }

    /// Probability of committing to a considered option with this signal.
    pub fn commit_probability(&self, signal: BinarySignal) -> f64 {
        if signal.is_good() {
            self.assumed_best_rate
        } else {
            1.0 - self.assumed_best_rate
        }
    }

    /// Unnormalized consideration weights `p^γ + 1/M`.
    pub fn consideration_weights(&self, prev_counts: &[u64]) -> Vec<f64> {
        let eps = 1.0 / self.n_options as f64;
        prev_counts.iter().map(|&p| (p as f64).powf(self.gamma) + eps).collect()
    }

    fn reward_rate(&self, option: usize) -> f64 {
        if option == BEST_OPTION {
            self.true_best_rate
        } else {
            0.5
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    /// Mean final-round reward among committing agents; `None` when nobody
    /// committed in the final round.
    pub mean_mimicker_performance: Option<f64>,
    /// Mean reward *rate* of the options committed to in the final round.
    pub mean_expected_performance: Option<f64>,
    pub committing_count_final: u64,
    /// Commit counts per round (outer) and option (inner).
    pub popularity_trajectory: Vec<Vec<u64>>,
    /// Per round, L1 distance between the popularity share and the exact
    /// posterior that the best option is each option.
    pub posterior_l1_trajectory: Vec<f64>,
}

impl SimulationResult {
    /// Performance net of the commitment cost.
    pub fn net_performance(&self, cost: f64) -> Option<f64> {
        self.mean_mimicker_performance.map(|m| m - cost)
    }

    /// Mean posterior L1 distance over the last `rounds` rounds.
    pub fn tail_posterior_l1(&self, rounds: usize) -> f64 {
        let n = rounds.clamp(1, self.posterior_l1_trajectory.len());
        let tail = &self.posterior_l1_trajectory[self.posterior_l1_trajectory.len() - n..];
        tail.iter().sum::<f64>() / n as f64
    }

    /// Share of the final round's commitments held by the best option.
    pub fn final_best_share(&self) -> Option<f64> {
        let last = self.popularity_trajectory.last()?;
        let total: u64 = last.iter().sum();
        (total > 0).then(|| last[BEST_OPTION] as f64 / total as f64)
    }
}

fn check_round_inputs(config: &SimulationConfig, prev_counts: &[u64], rewards: &[BinarySignal]) -> Result<()> {
    config.validate()?;
    if prev_counts.len() != config.n_options || rewards.len() != config.n_options {
        return Err(Error::invalid(format!(
            "expected {} options, got {} counts and {} rewards",
            config.n_options,
            prev_counts.len(),
            rewards.len()
        )));
    }
    Ok(())
}

/// Number of agents considering each option this round.
pub fn sample_considerations<R: Rng + ?Sized>(
    config: &SimulationConfig,
    prev_counts: &[u64],
    rng: &mut R,
) -> Result<Vec<u64>> {
    if prev_counts.len() != config.n_options {
        return Err(Error::invalid(format!(
            "expected {} counts, got {}",
            config.n_options,
            prev_counts.len()
        )));
    }
    Ok(rng::multinomial(
        rng,
        config.n_agents,
        &config.consideration_weights(prev_counts),
    ))
}

fn round_commits<R: Rng + ?Sized>(
    config: &SimulationConfig,
    prev_counts: &[u64],
    rewards: &[BinarySignal],
    rng: &mut R,
) -> Vec<u64> {
    let considered = rng::multinomial(rng, config.n_agents, &config.consideration_weights(prev_counts));
    considered
        .iter()
        .zip(rewards)
        .map(|(&c, &r)| rng::binomial(rng, c, config.commit_probability(r)))
        .collect()
}

/// One round of fresh decisions by all `N` agents given last round's commit
/// counts and rewards. Returns this round's commit counts.
pub fn run_round<R: Rng + ?Sized>(
    config: &SimulationConfig,
    prev_counts: &[u64],
    rewards: &[BinarySignal],
    rng: &mut R,
) -> Result<Vec<u64>> {
    check_round_inputs(config, prev_counts, rewards)?;
    Ok(round_commits(config, prev_counts, rewards, rng))
}

fn persisted<R: Rng + ?Sized>(
    config: &SimulationConfig,
    prev_counts: &[u64],
    rewards: &[BinarySignal],
    rng: &mut R,
) -> Vec<u64> {
    prev_counts
        .iter()
        .zip(rewards)
        .map(|(&c, &r)| rng::binomial(rng, c, config.commit_probability(r)))
        .collect()
}

/// Existing commitments that survive one round: each commitment to option
/// `j` is kept with probability `η^r (1-η)^(1-r)` given `j`'s latest reward.
pub fn persist_round<R: Rng + ?Sized>(
    config: &SimulationConfig,
    prev_counts: &[u64],
    rewards: &[BinarySignal],
    rng: &mut R,
) -> Result<Vec<u64>> {
    check_round_inputs(config, prev_counts, rewards)?;
    Ok(persisted(config, prev_counts, rewards, rng))
}

fn draw_rewards<R: Rng + ?Sized>(config: &SimulationConfig, rng: &mut R) -> Vec<BinarySignal> {
    (0..config.n_options)
        .map(|j| BinarySignal::from(rng.random::<f64>() < config.reward_rate(j)))
        .collect()
}

fn l1_to_posterior(counts: &[u64], posterior: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(posterior)
        .map(|(&c, &p)| {
            let share = if total == 0 { 0.0 } else { c as f64 / total as f64 };
            (share - p).abs()
        })
        .sum()
}

/// Simulate `config.n_rounds` rounds with the given stream.
///
/// Rewards are drawn once before round 1 (the signals round-1 agents see) and
/// then once per round; agents in round `t` see round `t-1`'s counts and
/// rewards and are paid with round `t`'s rewards. Round-1 counts start at
/// zero, so the first consideration is uniform.
pub fn simulate_with_rng(config: &SimulationConfig, rng: &mut SimRng) -> Result<SimulationResult> {
    config.validate()?;
    let m = config.n_options;
    let mut posterior = if config.assumed_best_rate > 0.5 {
        Some(PosteriorState::uniform(m, config.assumed_best_rate)?)
    } else {
        None
    };
    let uniform = vec![1.0 / m as f64; m];

    let mut prev_rewards = draw_rewards(config, rng);
    let mut prev_counts = vec![0u64; m];
    let mut popularity_trajectory = Vec::with_capacity(config.n_rounds);
    let mut posterior_l1_trajectory = Vec::with_capacity(config.n_rounds);
    let mut final_rewards = Vec::new();

    for _ in 0..config.n_rounds {
        if let Some(post) = posterior.as_mut() {
            post.update_in_place(&prev_rewards)?;
        }
        let mut counts = round_commits(config, &prev_counts, &prev_rewards, rng);
        if config.unfollow_enabled {
            let kept = persisted(config, &prev_counts, &prev_rewards, rng);
            counts.iter_mut().zip(kept).for_each(|(c, k)| *c += k);
        }
        let rewards = draw_rewards(config, rng);

        let l1 = match &posterior {
            Some(post) => l1_to_posterior(&counts, post.probabilities().as_slice()),
            None => l1_to_posterior(&counts, &uniform),
        };
        posterior_l1_trajectory.push(l1);
        popularity_trajectory.push(counts.clone());

        prev_counts = counts;
        final_rewards = rewards.clone();
        prev_rewards = rewards;
    }

    let committing: u64 = prev_counts.iter().sum();
    let (realized, expected) = if committing == 0 {
        (None, None)
    } else {
        let mut reward_sum = 0u64;
        let mut rate_sum = 0.0;
        for (j, (&c, r)) in prev_counts.iter().zip(&final_rewards).enumerate() {
            if r.is_good() {
                reward_sum += c;
            }
            rate_sum += c as f64 * config.reward_rate(j);
        }
        (
            Some(reward_sum as f64 / committing as f64),
            Some(rate_sum / committing as f64),
        )
    };

    Ok(SimulationResult {
        mean_mimicker_performance: realized,
        mean_expected_performance: expected,
        committing_count_final: committing,
        popularity_trajectory,
        posterior_l1_trajectory,
    })
}

/// One simulation run seeded from `config.seed` (repetition 0 of cell 0).
pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationResult> {
    let mut rng = rng::unit_rng(config.seed, 0, 0);
    simulate_with_rng(config, &mut rng)
}

/// Like [`run_simulation`], but commitments persist across rounds: each
/// existing commitment survives with its option's commit probability and
/// `N` fresh decisions are added every round.
pub fn run_unfollow_simulation(config: &SimulationConfig) -> Result<SimulationResult> {
    if !config.unfollow_enabled {
        return Err(Error::invalid("run_unfollow_simulation requires unfollow_enabled"));
    }
    run_simulation(config)
}

/// All `config.repetitions` runs, each on its own derived stream.
pub fn run_repetitions(config: &SimulationConfig) -> Result<Vec<SimulationResult>> {
    use rayon::prelude::*;
    config.validate()?;
    (0..config.repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::unit_rng(config.seed, 0, rep);
            simulate_with_rng(config, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(super) fn config() -> SimulationConfig {
        SimulationConfig {
            n_agents: 1000,
            n_options: 5,
            n_rounds: 50,
            true_best_rate: 0.7,
            assumed_best_rate: 0.7,
            gamma: 1.0,
            cost: 0.5,
            repetitions: 1,
            seed: 11,
            unfollow_enabled: false,
        }
    }

    #[test]
    fn validation() {
        assert!(config().validate().is_ok());
        for bad in [
            SimulationConfig {
                n_agents: 0,
                ..config()
            },
            SimulationConfig {
                n_options: 0,
                ..config()
            },
            SimulationConfig {
                n_rounds: 0,
                ..config()
            },
            SimulationConfig {
                true_best_rate: 0.5,
                ..config()
            },
            SimulationConfig {
                assumed_best_rate: 1.0,
                ..config()
            },
            SimulationConfig {
                assumed_best_rate: 0.4,
                ..config()
            },
            SimulationConfig {
                gamma: -0.1,
                ..config()
            },
            SimulationConfig {
                repetitions: 0,
                ..config()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        let ok = SimulationConfig {
            assumed_best_rate: 0.5,
            ..config()
        };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn deterministic_given_seed() {
        let a = run_simulation(&config()).unwrap();
        let b = run_simulation(&config()).unwrap();
        assert_eq!(a, b);
        let c = run_simulation(&SimulationConfig { seed: 12, ..config() }).unwrap();
        assert_ne!(a.popularity_trajectory, c.popularity_trajectory);
    }

    #[test]
    fn trajectories_are_well_formed() {
        let r = run_simulation(&config()).unwrap();
        assert_eq!(r.popularity_trajectory.len(), 50);
        assert_eq!(r.posterior_l1_trajectory.len(), 50);
        for (counts, l1) in r.popularity_trajectory.iter().zip(&r.posterior_l1_trajectory) {
            assert_eq!(counts.len(), 5);
            assert!(counts.iter().sum::<u64>() <= 1000);
            assert!((0.0..=2.0).contains(l1));
        }
        assert_eq!(
            r.committing_count_final,
            r.popularity_trajectory.last().unwrap().iter().sum::<u64>()
        );
    }

    #[test]
    fn round_input_lengths_checked() {
        let mut rng = rng::seeded(0);
        let c = config();
        assert!(run_round(&c, &[0; 4], &[BinarySignal::GOOD; 5], &mut rng).is_err());
        assert!(run_round(&c, &[0; 5], &[BinarySignal::GOOD; 3], &mut rng).is_err());
        assert!(persist_round(&c, &[0; 2], &[BinarySignal::GOOD; 5], &mut rng).is_err());
    }

    #[test]
    fn unfollow_requires_flag() {
        assert!(run_unfollow_simulation(&config()).is_err());
        let r = run_unfollow_simulation(&SimulationConfig {
            unfollow_enabled: true,
            ..config()
        })
        .unwrap();
        assert_eq!(r.popularity_trajectory.len(), 50);
    }

    #[test]
    fn near_certain_signal_concentrates() {
        let c = SimulationConfig {
            n_agents: 10_000,
            n_options: 2,
            assumed_best_rate: 1.0 - 1e-9,
            ..config()
        };
        let mut rng = rng::seeded(3);
        let counts = run_round(&c, &[10_000, 0], &[BinarySignal::GOOD, BinarySignal::BAD], &mut rng).unwrap();
        assert!(counts[0] >= 9_990, "{counts:?}");
        assert_eq!(counts[1], 0);
        let kept = persist_round(&c, &[10_000, 0], &[BinarySignal::GOOD, BinarySignal::BAD], &mut rng).unwrap();
        assert_eq!(kept[0], 10_000);
    }
}
