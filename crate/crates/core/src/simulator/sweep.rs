use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use super::{simulate_with_rng, SimulationConfig};
use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_MAX_CELLS: usize = 10_000;

/// 97.5% standard-normal quantile.
const Z_975: f64 = 1.959_963_984_540_054;

fn one_or_many<'de, D, T>(de: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(de)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

fn default_gamma() -> Vec<f64> {
    vec![1.0]
}

fn default_cost() -> f64 {
    0.5
}

fn default_repetitions() -> u32 {
    1
}

fn default_max_cells() -> usize {
    DEFAULT_MAX_CELLS
}

/// Crossed parameter grid. Each list field accepts a scalar or an array in
/// JSON, so a single-run config also parses as a one-cell grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    #[serde(deserialize_with = "one_or_many")]
    pub n_agents: Vec<u64>,
    #[serde(deserialize_with = "one_or_many")]
    pub n_options: Vec<usize>,
    #[serde(deserialize_with = "one_or_many")]
    pub n_rounds: Vec<usize>,
    #[serde(deserialize_with = "one_or_many")]
    pub true_best_rate: Vec<f64>,
    /// Empty means "equal to the cell's true_best_rate".
    #[serde(default, deserialize_with = "one_or_many")]
    pub assumed_best_rate: Vec<f64>,
    #[serde(default = "default_gamma", deserialize_with = "one_or_many")]
    pub gamma: Vec<f64>,
    #[serde(default = "default_cost")]
    pub cost: f64,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub unfollow_enabled: bool,
    #[serde(default = "default_max_cells")]
    pub max_cells: usize,
}

impl SweepGrid {
    pub fn single(config: &SimulationConfig) -> Self {
        Self {
            n_agents: vec![config.n_agents],
            n_options: vec![config.n_options],
            n_rounds: vec![config.n_rounds],
            true_best_rate: vec![config.true_best_rate],
            assumed_best_rate: vec![config.assumed_best_rate],
            gamma: vec![config.gamma],
            cost: config.cost,
            repetitions: config.repetitions,
            seed: config.seed,
            unfollow_enabled: config.unfollow_enabled,
            max_cells: DEFAULT_MAX_CELLS,
        }
    }

    pub fn cell_count(&self) -> usize {
        let assumed = self.assumed_best_rate.len().max(1);
        [
            self.n_agents.len(),
            self.n_options.len(),
            self.n_rounds.len(),
            self.true_best_rate.len(),
            assumed,
            self.gamma.len(),
        ]
        .iter()
        .product()
    }

    /// Every cell's configuration in deterministic order (last field fastest).
    pub fn cells(&self) -> Result<Vec<SimulationConfig>> {
        for (name, len) in [
            ("n_agents", self.n_agents.len()),
            ("n_options", self.n_options.len()),
            ("n_rounds", self.n_rounds.len()),
            ("true_best_rate", self.true_best_rate.len()),
            ("gamma", self.gamma.len()),
        ] {
            if len == 0 {
                return Err(Error::invalid(format!("sweep field `{name}` is empty")));
            }
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be positive"));
        }
        let cells = self.cell_count();
        if cells > self.max_cells {
            return Err(Error::CellCap {
                cells,
                cap: self.max_cells,
            });
        }
        let mut out = Vec::with_capacity(cells);
        for &n_agents in &self.n_agents {
            for &n_options in &self.n_options {
                for &n_rounds in &self.n_rounds {
                    for &true_best_rate in &self.true_best_rate {
                        let assumed: Vec<f64> = if self.assumed_best_rate.is_empty() {
                            vec![true_best_rate]
                        } else {
                            self.assumed_best_rate.clone()
                        };
                        for &assumed_best_rate in &assumed {
                            for &gamma in &self.gamma {
                                let cfg = SimulationConfig {
                                    n_agents,
                                    n_options,
                                    n_rounds,
                                    true_best_rate,
                                    assumed_best_rate,
                                    gamma,
                                    cost: self.cost,
                                    repetitions: self.repetitions,
                                    seed: self.seed,
                                    unfollow_enabled: self.unfollow_enabled,
                                };
                                cfg.validate()
                                    .map_err(|e| Error::invalid(format!("sweep cell {}: {e}", out.len())))?;
                                out.push(cfg);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Aggregates for one grid cell over its repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: u32,
    pub config: SimulationConfig,
    /// Repetitions with at least one committing agent in the final round.
    pub valid_repetitions: u32,
    /// Mean over repetitions of the expected reward of the options chosen
    /// by committing agents in the final round.
    pub mean_performance: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub mean_net_performance: Option<f64>,
    /// Same quantity from the realized final-round rewards.
    pub mean_realized_performance: Option<f64>,
    pub realized_ci_low: Option<f64>,
    pub realized_ci_high: Option<f64>,
    pub mean_committing_final: f64,
    /// Mean posterior L1 distance over the last half of the rounds.
    pub mean_tail_posterior_l1: f64,
}

impl SweepRow {
    pub fn ci_half_width(&self) -> Option<f64> {
        Some((self.ci_high? - self.ci_low?) / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub grid: SweepGrid,
    pub rows: Vec<SweepRow>,
}

struct RepSummary {
    performance: Option<f64>,
    expected: Option<f64>,
    committing: u64,
    tail_l1: f64,
}

/// Mean and normal-approximation 95% CI.
fn mean_ci(values: &[f64]) -> (Option<f64>, Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), None, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = Z_975 * (var / n).sqrt();
    (Some(mean), Some(mean - half), Some(mean + half))
}

/// Run every cell of `grid` for `grid.repetitions` repetitions each.
///
/// Work units run in parallel; unit (cell, repetition) always draws from the
/// stream `rng::unit_rng(seed, cell, repetition)`, so results do not depend
/// on scheduling.
pub fn run_sweep(grid: &SweepGrid) -> Result<SweepTable> {
    let cells = grid.cells()?;
    let reps = grid.repetitions;
    let units: Vec<(usize, u32)> = (0..cells.len()).flat_map(|c| (0..reps).map(move |r| (c, r))).collect();
    let summaries: Vec<RepSummary> = units
        .par_iter()
        .map(|&(c, r)| {
            let cfg = &cells[c];
            let mut stream = rng::unit_rng(grid.seed, c as u32, r);
            let result = simulate_with_rng(cfg, &mut stream)?;
            Ok(RepSummary {
                performance: result.mean_mimicker_performance,
                expected: result.mean_expected_performance,
                committing: result.committing_count_final,
                tail_l1: result.tail_posterior_l1(cfg.n_rounds / 2),
            })
        })
        .collect::<Result<_>>()?;

    let rows = cells
        .into_iter()
        .enumerate()
        .map(|(c, config)| {
            let unit = &summaries[c * reps as usize..(c + 1) * reps as usize];
            let realized: Vec<f64> = unit.iter().filter_map(|s| s.performance).collect();
            let expected: Vec<f64> = unit.iter().filter_map(|s| s.expected).collect();
            let (mean, lo, hi) = mean_ci(&expected);
            let (r_mean, r_lo, r_hi) = mean_ci(&realized);
            SweepRow {
                cell: c as u32,
                valid_repetitions: expected.len() as u32,
                mean_performance: mean,
                ci_low: lo,
                ci_high: hi,
                mean_net_performance: mean.map(|m| m - config.cost),
                mean_realized_performance: r_mean,
                realized_ci_low: r_lo,
                realized_ci_high: r_hi,
                mean_committing_final: unit.iter().map(|s| s.committing as f64).sum::<f64>() / reps as f64,
                mean_tail_posterior_l1: unit.iter().map(|s| s.tail_l1).sum::<f64>() / reps as f64,
                config,
            }
        })
        .collect();
    Ok(SweepTable {
        grid: grid.clone(),
        rows,
    })
}

pub const SWEEP_CSV_HEADER: [&str; 20] = [
    "cell",
    "n_agents",
    "n_options",
    "n_rounds",
    "true_best_rate",
    "assumed_best_rate",
    "gamma",
    "cost",
    "unfollow_enabled",
    "repetitions",
    "valid_repetitions",
    "mean_performance",
    "ci_low",
    "ci_high",
    "mean_net_performance",
    "mean_realized_performance",
    "realized_ci_low",
    "realized_ci_high",
    "mean_committing_final",
    "mean_tail_posterior_l1",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SweepTable {
    /// One row per cell; undefined statistics are empty fields.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(SWEEP_CSV_HEADER)?;
        for row in &self.rows {
            let c = &row.config;
            out.write_record([
                row.cell.to_string(),
                c.n_agents.to_string(),
                c.n_options.to_string(),
                c.n_rounds.to_string(),
                c.true_best_rate.to_string(),
                c.assumed_best_rate.to_string(),
                c.gamma.to_string(),
                c.cost.to_string(),
                c.unfollow_enabled.to_string(),
                c.repetitions.to_string(),
                row.valid_repetitions.to_string(),
                opt(row.mean_performance),
                opt(row.ci_low),
                opt(row.ci_high),
                opt(row.mean_net_performance),
                opt(row.mean_realized_performance),
                opt(row.realized_ci_low),
                opt(row.realized_ci_high),
                row.mean_committing_final.to_string(),
                row.mean_tail_posterior_l1.to_string(),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<sweep csv>", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::run_repetitions;

    fn grid() -> SweepGrid {
        serde_json::from_str(
            r#"{"n_agents": 200, "n_options": [3, 4], "n_rounds": 20,
                "true_best_rate": 0.7, "gamma": [0.0, 1.0], "repetitions": 4, "seed": 9}"#,
        )
        .unwrap()
    }

    #[test]
    fn scalar_or_list_fields() {
        let g = grid();
        assert_eq!(g.n_agents, vec![200]);
        assert_eq!(g.n_options, vec![3, 4]);
        assert!(g.assumed_best_rate.is_empty());
        assert_eq!(g.cell_count(), 4);
        let cells = g.cells().unwrap();
        assert_eq!(cells[0].assumed_best_rate, 0.7);
        assert_eq!((cells[1].n_options, cells[1].gamma), (3, 1.0));
        assert_eq!((cells[2].n_options, cells[2].gamma), (4, 0.0));
    }

    #[test]
    fn cap_and_empty_lists_refused() {
        let mut g = grid();
        g.max_cells = 3;
        assert!(matches!(g.cells(), Err(Error::CellCap { cells: 4, cap: 3 })));
        let mut g = grid();
        g.gamma.clear();
        assert!(g.cells().is_err());
    }

    #[test]
    fn one_cell_matches_repetitions() {
        let cfg = SimulationConfig {
            n_agents: 300,
            n_options: 4,
            n_rounds: 30,
            true_best_rate: 0.7,
            assumed_best_rate: 0.7,
            gamma: 1.0,
            cost: 0.5,
            repetitions: 6,
            seed: 5,
            unfollow_enabled: false,
        };
        let table = run_sweep(&SweepGrid::single(&cfg)).unwrap();
        assert_eq!(table.rows.len(), 1);
        let reps = run_repetitions(&cfg).unwrap();
        let mean_of = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
        let expected: Vec<f64> = reps.iter().filter_map(|r| r.mean_expected_performance).collect();
        let realized: Vec<f64> = reps.iter().filter_map(|r| r.mean_mimicker_performance).collect();
        let row = &table.rows[0];
        assert_eq!(row.valid_repetitions as usize, expected.len());
        assert!((row.mean_performance.unwrap() - mean_of(expected)).abs() < 1e-12);
        assert!((row.mean_realized_performance.unwrap() - mean_of(realized)).abs() < 1e-12);
    }

    #[test]
    fn sweep_is_deterministic_and_csv_shaped() {
        let a = run_sweep(&grid()).unwrap();
        let b = run_sweep(&grid()).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("cell,n_agents,"));
    }

    #[test]
    fn mean_ci_basics() {
        assert_eq!(mean_ci(&[]), (None, None, None));
        assert_eq!(mean_ci(&[2.0]), (Some(2.0), None, None));
        let (m, lo, hi) = mean_ci(&[1.0, 3.0]);
        assert_eq!(m, Some(2.0));
        let half = Z_975 * (2.0f64 / 2.0).sqrt();
        assert!((hi.unwrap() - 2.0 - half).abs() < 1e-12);
        assert!((2.0 - lo.unwrap() - half).abs() < 1e-12);
    }
}
