use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::PanelDataset;

const Z95: f64 = 1.959_963_984_540_054;

/// Interval on the real line with configurable closedness at each end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub label: String,
    pub lower: f64,
    pub upper: f64,
    pub lower_inclusive: bool,
    pub upper_inclusive: bool,
}

impl Bin {
    pub fn closed(label: &str, lower: f64, upper: f64) -> Self {
        Self {
            label: label.into(),
            lower,
            upper,
            lower_inclusive: true,
            upper_inclusive: true,
        }
    }

    /// `(lower, upper]`
    pub fn left_open(label: &str, lower: f64, upper: f64) -> Self {
        Self {
            label: label.into(),
            lower,
            upper,
            lower_inclusive: false,
            upper_inclusive: true,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lower_inclusive {
            x >= self.lower
        } else {
            x > self.lower
        };
        let below = if self.upper_inclusive {
            x <= self.upper
        } else {
            x < self.upper
        };
        above && below
    }
}

/// `{0}`, `[1, 10]`, `(10, 100]`, `(100, ∞)`.
pub fn default_popularity_bins() -> Vec<Bin> {
    vec![
        Bin::closed("0", 0.0, 0.0),
        Bin::closed("1-10", 1.0, 10.0),
        Bin::left_open("11-100", 10.0, 100.0),
        Bin::left_open(">100", 100.0, f64::INFINITY),
    ]
}

/// `q ≤ 0` and `q > 0`.
pub fn default_performance_bins() -> Vec<Bin> {
    vec![
        Bin::closed("q<=0", f64::NEG_INFINITY, 0.0),
        Bin::left_open("q>0", 0.0, f64::INFINITY),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedCell {
    pub pop_bin: String,
    pub perf_bin: String,
    pub n: usize,
    pub mean_observed: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub mean_predicted: Option<f64>,
    pub predicted_ci_lo: Option<f64>,
    pub predicted_ci_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedSummary {
    /// Row-major: popularity bin outer, performance bin inner.
    pub cells: Vec<BinnedCell>,
}

pub const BINNED_CSV_HEADER: [&str; 7] = [
    "pop_bin",
    "perf_bin",
    "n",
    "mean_observed",
    "ci_lo",
    "ci_hi",
    "mean_predicted",
];

impl BinnedSummary {
    pub fn total_count(&self) -> usize {
        self.cells.iter().map(|c| c.n).sum()
    }

    pub fn cell(&self, pop_bin: &str, perf_bin: &str) -> Option<&BinnedCell> {
        self.cells
            .iter()
            .find(|c| c.pop_bin == pop_bin && c.perf_bin == perf_bin)
    }

    /// Undefined values are written as empty fields.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(BINNED_CSV_HEADER)?;
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.cells {
            w.write_record([
                c.pop_bin.clone(),
                c.perf_bin.clone(),
                c.n.to_string(),
                fmt(c.mean_observed),
                fmt(c.ci_lo),
                fmt(c.ci_hi),
                fmt(c.mean_predicted),
            ])?;
        }
        w.flush().map_err(|e| Error::io("binned summary", e))?;
        Ok(())
    }
}

/// Mean with a Gaussian 95% interval; the interval needs two or more values.
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
    let half = Z95 * (var / n).sqrt();
    (Some(mean), Some(mean - half), Some(mean + half))
}

/// Group scored user-days by (previous popularity bin, performance bin) and
/// summarize the observed net change in popularity, plus the predicted change
/// (predicted new minus observed lost) when `predictions` are given.
pub fn binned_interaction_summary(
    panel: &PanelDataset,
    predictions: Option<&[f64]>,
    pop_bins: &[Bin],
    perf_bins: &[Bin],
) -> Result<BinnedSummary> {
    if pop_bins.is_empty() || perf_bins.is_empty() {
        return Err(Error::invalid(
            "at least one popularity bin and one performance bin are required",
        ));
    }
    let rows: Vec<_> = panel.rows().collect();
    if let Some(pred) = predictions {
        if pred.len() != rows.len() {
            return Err(Error::invalid(format!(
                "{} predictions for {} panel rows",
                pred.len(),
                rows.len()
            )));
        }
    }
    let cells = pop_bins.len() * perf_bins.len();
    let mut observed: Vec<Vec<f64>> = vec![Vec::new(); cells];
    let mut predicted: Vec<Vec<f64>> = vec![Vec::new(); cells];
    for (i, row) in rows.iter().enumerate() {
        let p = row.prev_popularity as f64;
        let pi = pop_bins.iter().position(|b| b.contains(p)).ok_or_else(|| {
            Error::invalid(format!(
                "row {} (user {}, {}) has popularity {} outside every bin",
                i, row.user_id, row.date, row.prev_popularity
            ))
        })?;
        let qi = perf_bins
            .iter()
            .position(|b| b.contains(row.performance))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "row {} (user {}, {}) has performance {} outside every bin",
                    i, row.user_id, row.date, row.performance
                ))
            })?;
        let cell = pi * perf_bins.len() + qi;
        observed[cell].push(row.net_change());
        if let Some(pred) = predictions {
            predicted[cell].push(pred[i] - row.lost_mimickers as f64);
        }
    }
    let mut out = Vec::with_capacity(cells);
    for (pi, pb) in pop_bins.iter().enumerate() {
        for (qi, qb) in perf_bins.iter().enumerate() {
            let cell = pi * perf_bins.len() + qi;
            let (mean_observed, ci_lo, ci_hi) = mean_ci(&observed[cell]);
            let (mean_predicted, predicted_ci_lo, predicted_ci_hi) = mean_ci(&predicted[cell]);
            out.push(BinnedCell {
                pop_bin: pb.label.clone(),
                perf_bin: qb.label.clone(),
                n: observed[cell].len(),
                mean_observed,
                ci_lo,
                ci_hi,
                mean_predicted,
                predicted_ci_lo,
                predicted_ci_hi,
            });
        }
    }
    Ok(BinnedSummary { cells: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::fixtures::panel;

    #[test]
    fn default_bins_partition_counts() {
        let pops = default_popularity_bins();
        for (p, label) in [
            (0.0, "0"),
            (1.0, "1-10"),
            (10.0, "1-10"),
            (11.0, "11-100"),
            (100.0, "11-100"),
            (101.0, ">100"),
        ] {
            let hits: Vec<_> = pops.iter().filter(|b| b.contains(p)).collect();
            assert_eq!(hits.len(), 1);
            assert_eq!(hits[0].label, label);
        }
        let perf = default_performance_bins();
        assert!(perf[0].contains(0.0) && !perf[1].contains(0.0));
        assert!(perf[1].contains(1e-12));
    }

    #[test]
    fn counts_sum_and_empty_cells_stay_undefined() {
        let p = panel(&[
            (vec![1, 2, 3], vec![0, 5, 5], vec![0.1, 0.1, -0.2], vec![1, 3, 0]),
            (vec![1, 2, 3], vec![1, 8, 5], vec![0.1, 0.2, -0.2], vec![0, 5, 1]),
        ]);
        let s = binned_interaction_summary(&p, None, &default_popularity_bins(), &default_performance_bins()).unwrap();
        assert_eq!(s.cells.len(), 8);
        assert_eq!(s.total_count(), 6);
        let empty = s.cell(">100", "q>0").unwrap();
        assert_eq!(empty.n, 0);
        assert!(empty.mean_observed.is_none() && empty.ci_lo.is_none());
        let c = s.cell("1-10", "q>0").unwrap();
        assert_eq!(c.n, 3);
        // (3 + 0 + 5) / 3
        assert!((c.mean_observed.unwrap() - 8.0 / 3.0).abs() < 1e-12);
        assert!(c.mean_predicted.is_none());
    }

    #[test]
    fn predictions_subtract_observed_losses() {
        let p = panel(&[(vec![1, 2], vec![1, 2], vec![0.1, 0.2], vec![1, 1])]);
        let s = binned_interaction_summary(
            &p,
            Some(&[0.5, 1.5]),
            &default_popularity_bins(),
            &default_performance_bins(),
        )
        .unwrap();
        let c = s.cell("1-10", "q>0").unwrap();
        assert_eq!(c.mean_predicted, Some(1.0));
        assert!(binned_interaction_summary(
            &p,
            Some(&[0.5]),
            &default_popularity_bins(),
            &default_performance_bins()
        )
        .is_err());
    }

    #[test]
    fn uncovered_rows_are_rejected() {
        let p = panel(&[(vec![1], vec![50], vec![0.1], vec![1])]);
        let bins = vec![Bin::closed("small", 0.0, 10.0)];
        assert!(binned_interaction_summary(&p, None, &bins, &default_performance_bins()).is_err());
    }

    #[test]
    fn homogeneous_users_share_the_global_mean() {
        let p = panel(&[(vec![1, 2, 3], vec![2; 3], vec![0.3; 3], vec![2; 3])]);
        let s = binned_interaction_summary(&p, None, &default_popularity_bins(), &default_performance_bins()).unwrap();
        let c = s.cell("1-10", "q>0").unwrap();
        assert_eq!(c.mean_observed, Some(2.0));
        assert_eq!(c.ci_lo, Some(2.0));
    }
}
