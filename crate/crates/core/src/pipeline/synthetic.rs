use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use super::trades::TradeRecord;
use super::{is_weekend, previous_weekday};
use crate::error::{Error, Result};
use crate::models::{decision_probabilities, MarketSnapshot, ModelSpec};
use crate::panel::{PanelDataset, PanelDay};
use crate::rng::{multinomial, seeded, SimRng};

/// Follower accounts (one per mirror) get IDs from here upward.
pub const FOLLOWER_ID_OFFSET: u64 = 1_000_000;

const PARENT_AMOUNT: f64 = 100.0;
const RATE_MOVE: f64 = 0.01;

/// One designated best trader with good-day rate `best_rate`; everyone else
/// at `base_rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkillDistribution {
    #[serde(default = "default_best_rate")]
    pub best_rate: f64,
    #[serde(default = "default_base_rate")]
    pub base_rate: f64,
}

fn default_best_rate() -> f64 {
    0.7
}

fn default_base_rate() -> f64 {
    0.5
}

impl Default for SkillDistribution {
    fn default() -> Self {
        Self {
            best_rate: default_best_rate(),
            base_rate: default_base_rate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticMarketConfig {
    pub n_users: usize,
    /// Weekdays in the emitted panel, after the warm-up.
    pub n_days: usize,
    pub decisions_per_day: u64,
    pub generator_model: ModelSpec,
    #[serde(default)]
    pub trader_skill: SkillDistribution,
    /// Per-mirror probability of ending on each following weekday.
    #[serde(default)]
    pub unfollow_rate: f64,
    /// Initial mimickers per trader are uniform on `0..=initial_popularity_max`.
    #[serde(default = "default_initial_max")]
    pub initial_popularity_max: u64,
    /// Performance window and warm-up length in calendar days.
    #[serde(default = "default_window")]
    pub window_days: u32,
    #[serde(default = "default_start")]
    pub start_date: NaiveDate,
    #[serde(default)]
    pub seed: u64,
}

fn default_initial_max() -> u64 {
    10
}

fn default_window() -> u32 {
    30
}

fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2011, 6, 1).expect("valid date")
}

impl SyntheticMarketConfig {
    pub fn new(n_users: usize, n_days: usize, decisions_per_day: u64, generator_model: ModelSpec, seed: u64) -> Self {
        Self {
            n_users,
            n_days,
            decisions_per_day,
            generator_model,
            trader_skill: SkillDistribution::default(),
            unfollow_rate: 0.0,
            initial_popularity_max: default_initial_max(),
            window_days: default_window(),
            start_date: default_start(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_days == 0 {
            return Err(Error::invalid("n_users and n_days must be positive"));
        }
        if self.n_users as u64 >= FOLLOWER_ID_OFFSET {
            return Err(Error::invalid(format!("n_users must be below {FOLLOWER_ID_OFFSET}")));
        }
        if self.window_days == 0 {
            return Err(Error::invalid("window_days must be positive"));
        }
        for (name, v) in [
            ("unfollow_rate", self.unfollow_rate),
            ("trader_skill.best_rate", self.trader_skill.best_rate),
            ("trader_skill.base_rate", self.trader_skill.base_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        self.generator_model.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserSkill {
    pub user_id: u64,
    pub good_day_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayTotals {
    pub date: NaiveDate,
    pub total_new: u64,
    pub total_lost: u64,
    pub total_popularity: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: SyntheticMarketConfig,
    pub best_user: u64,
    pub skills: Vec<UserSkill>,
    pub days: Vec<DayTotals>,
    pub mirror_count: u64,
}

#[derive(Debug, Clone)]
pub struct SyntheticMarket {
    /// In trade-ID order; empty from [`generate_synthetic_panel`].
    pub trades: Vec<TradeRecord>,
    pub panel: PanelDataset,
    pub truth: GroundTruth,
}

struct Mirror {
    id: u64,
    ratio: f64,
    /// Last weekday index the relationship is active on.
    last: usize,
}

fn weekdays_from(start: NaiveDate) -> impl Iterator<Item = NaiveDate> {
    start.iter_days().filter(|d| !is_weekend(*d))
}

/// Simulate a copy-trading market and emit its trade log, panel and truth.
///
/// Every trader makes one same-day trade per weekday: 100 invested, profit
/// +1 on a good day and −1 otherwise. On each panel day the day's new
/// mimickers are allocated by the generator model given the previous
/// weekday's popularity and the trailing-window mean return. Each mirror is
/// a separate follower account copying every trade of its target at a fixed
/// ratio; its lifetime in weekdays is geometric in `unfollow_rate`.
pub fn generate_synthetic_market(config: &SyntheticMarketConfig) -> Result<SyntheticMarket> {
    simulate(config, true)
}

/// As [`generate_synthetic_market`] with the same random draws, without
/// materializing the trade log.
pub fn generate_synthetic_panel(config: &SyntheticMarketConfig) -> Result<SyntheticMarket> {
    simulate(config, false)
}

fn draw_lifetime(rng: &mut SimRng, geometric: Option<&Geometric>) -> usize {
    match geometric {
        None => usize::MAX,
        Some(g) => usize::try_from(g.sample(rng)).unwrap_or(usize::MAX),
    }
}

fn simulate(config: &SyntheticMarketConfig, emit: bool) -> Result<SyntheticMarket> {
    config.validate()?;
    let mut rng = seeded(config.seed);
    let geometric = if config.unfollow_rate > 0.0 {
        Some(Geometric::new(config.unfollow_rate).map_err(|e| Error::invalid(e.to_string()))?)
    } else {
        None
    };

    let start = weekdays_from(config.start_date).next().expect("weekday exists");
    let first_panel = start
        .checked_add_days(Days::new(config.window_days as u64))
        .expect("date in range");
    let panel_dates: Vec<NaiveDate> = weekdays_from(first_panel).take(config.n_days).collect();
    let end = *panel_dates.last().expect("n_days > 0");
    let trade_days: Vec<NaiveDate> = weekdays_from(start).take_while(|d| *d <= end).collect();
    let last_index = trade_days.len() - 1;
    let first_panel_index = trade_days
        .iter()
        .position(|d| *d >= first_panel)
        .expect("panel inside calendar");

    let users: Vec<u64> = (1..=config.n_users as u64).collect();
    let skills: Vec<f64> = users
        .iter()
        .map(|&u| {
            if u == 1 {
                config.trader_skill.best_rate
            } else {
                config.trader_skill.base_rate
            }
        })
        .collect();

    let mut next_mirror = 1u64;
    let mut new_mirror = |rng: &mut SimRng, first: usize| {
        let ratio = rng.random_range(1..=20u32) as f64 / 20.0;
        let life = draw_lifetime(rng, geometric.as_ref());
        let m = Mirror {
            id: next_mirror,
            ratio,
            last: first.saturating_add(life).min(last_index),
        };
        next_mirror += 1;
        m
    };

    let mut active: Vec<Vec<Mirror>> = Vec::with_capacity(users.len());
    for _ in &users {
        let p0 = rng.random_range(0..=config.initial_popularity_max);
        active.push((0..p0).map(|_| new_mirror(&mut rng, 0)).collect());
    }

    // returns[i][t]: trader i's return on trade day t
    let mut returns: Vec<Vec<f64>> = vec![Vec::with_capacity(trade_days.len()); users.len()];
    let mut trades = Vec::new();
    let mut next_trade = 1u64;
    let mut panel_days = Vec::with_capacity(panel_dates.len());
    let mut totals = Vec::with_capacity(panel_dates.len());
    let window_start = |d: NaiveDate| {
        d.checked_sub_days(Days::new(config.window_days as u64))
            .expect("date in range")
    };

    for (t, &date) in trade_days.iter().enumerate() {
        // previous weekday's popularity, then drop relationships that ended there
        let prev_pop: Vec<u64> = active.iter().map(|v| v.len() as u64).collect();
        let lost: Vec<u64> = active
            .iter_mut()
            .map(|v| {
                let before = v.len();
                v.retain(|m| m.last >= t);
                (before - v.len()) as u64
            })
            .collect();

        if t >= first_panel_index {
            debug_assert!(t == 0 || trade_days[t - 1] == previous_weekday(date));
            let lo = window_start(date);
            let mut ids = Vec::new();
            let mut perf = Vec::new();
            let mut pop = Vec::new();
            let mut lost_today = Vec::new();
            let mut members = Vec::new();
            for (i, &u) in users.iter().enumerate() {
                let window: Vec<f64> = (0..t).filter(|&s| trade_days[s] >= lo).map(|s| returns[i][s]).collect();
                if window.is_empty() {
                    continue;
                }
                ids.push(u);
                perf.push(window.iter().sum::<f64>() / window.len() as f64);
                pop.push(prev_pop[i]);
                lost_today.push(lost[i]);
                members.push(i);
            }
            let mut new_counts = vec![0u64; ids.len()];
            if !ids.is_empty() {
                let index = panel_days.len() as u32;
                let snapshot = MarketSnapshot::new(index, pop, perf)?;
                let theta = decision_probabilities(&config.generator_model, &snapshot)?;
                new_counts = multinomial(&mut rng, config.decisions_per_day, theta.as_slice());
                for (&i, &n) in members.iter().zip(&new_counts) {
                    for _ in 0..n {
                        let m = new_mirror(&mut rng, t);
                        active[i].push(m);
                    }
                }
                totals.push(DayTotals {
                    date,
                    total_new: new_counts.iter().sum(),
                    total_lost: lost_today.iter().sum(),
                    total_popularity: snapshot.popularity().iter().sum(),
                });
                panel_days.push(PanelDay::new(date, ids, snapshot, new_counts, lost_today)?);
            }
        }

        for (i, &u) in users.iter().enumerate() {
            let good = rng.random_bool(skills[i]);
            let sign = if good { 1.0 } else { -1.0 };
            let profit = sign;
            returns[i].push(profit / PARENT_AMOUNT);
            if !emit {
                continue;
            }
            let parent_id = next_trade;
            next_trade += 1;
            let close_rate = 1.0 + sign * RATE_MOVE;
            let asset = format!("SYN{u}");
            trades.push(TradeRecord {
                trade_id: parent_id,
                user_id: u,
                open_date: date,
                close_date: Some(date),
                asset: asset.clone(),
                amount_invested: PARENT_AMOUNT,
                units: PARENT_AMOUNT,
                leverage: 1.0,
                open_rate: 1.0,
                close_rate: Some(close_rate),
                net_profit: Some(profit),
                parent_trade_id: None,
                mirror_id: None,
                imputed: false,
            });
            for m in &active[i] {
                trades.push(TradeRecord {
                    trade_id: next_trade,
                    user_id: FOLLOWER_ID_OFFSET + m.id,
                    open_date: date,
                    close_date: Some(date),
                    asset: asset.clone(),
                    amount_invested: m.ratio * PARENT_AMOUNT,
                    units: m.ratio * PARENT_AMOUNT,
                    leverage: 1.0,
                    open_rate: 1.0,
                    close_rate: Some(close_rate),
                    net_profit: Some(m.ratio * profit),
                    parent_trade_id: Some(parent_id),
                    mirror_id: Some(m.id),
                    imputed: false,
                });
                next_trade += 1;
            }
        }
    }

    let truth = GroundTruth {
        config: config.clone(),
        best_user: 1,
        skills: users
            .iter()
            .zip(&skills)
            .map(|(&user_id, &good_day_rate)| UserSkill { user_id, good_day_rate })
            .collect(),
        days: totals,
        mirror_count: next_mirror - 1,
    };
    Ok(SyntheticMarket {
        trades,
        panel: PanelDataset::new(panel_days)?,
        truth,
    })
}
