//! Cross-validated model comparison, error measures, binned
//! popularity-by-performance summaries, and the interaction regression.

mod binning;
mod metrics;
mod ols;

pub use binning::{
    binned_interaction_summary, default_performance_bins, default_popularity_bins, Bin, BinnedCell, BinnedSummary,
    BINNED_CSV_HEADER,
};
pub use metrics::{error_metrics, relative_error, round_half_up, ErrorMetrics};
pub use ols::{
    least_squares, ols_interaction_regression, regression_from_design, Coefficient, LeastSquares, RegressionResult,
};

use std::collections::BTreeSet;
use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{fit, predict_panel};
use crate::models::{ModelFamily, ModelSpec};
use crate::panel::PanelDataset;
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvKind {
    ByUser10fold,
    ByDay10fold,
    TemporalLastFraction,
}

impl CvKind {
    pub fn name(self) -> &'static str {
        match self {
            CvKind::ByUser10fold => "by_user_10fold",
            CvKind::ByDay10fold => "by_day_10fold",
            CvKind::TemporalLastFraction => "temporal_last_fraction",
        }
    }
}

impl std::str::FromStr for CvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [CvKind::ByUser10fold, CvKind::ByDay10fold, CvKind::TemporalLastFraction]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown cross-validation scheme {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvScheme {
    pub kind: CvKind,
    #[serde(default = "default_fraction")]
    pub fraction: f64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_fraction() -> f64 {
    0.10
}

fn default_folds() -> usize {
    10
}

impl CvScheme {
    pub fn by_user(seed: u64) -> Self {
        Self {
            kind: CvKind::ByUser10fold,
            fraction: default_fraction(),
            folds: default_folds(),
            seed,
        }
    }

    pub fn by_day(seed: u64) -> Self {
        Self {
            kind: CvKind::ByDay10fold,
            ..Self::by_user(seed)
        }
    }

    pub fn temporal(fraction: f64) -> Self {
        Self {
            kind: CvKind::TemporalLastFraction,
            fraction,
            ..Self::by_user(0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return Err(Error::invalid(format!(
                "{}: fraction must lie in (0, 1), got {}",
                self.kind.name(),
                self.fraction
            )));
        }
        if self.folds < 2 {
            return Err(Error::invalid(format!(
                "{}: need at least 2 folds, got {}",
                self.kind.name(),
                self.folds
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Fold {
    pub train: PanelDataset,
    pub test: PanelDataset,
}

/// Partition `panel` into train/test pairs.
///
/// The user scheme keeps every day's full snapshot and only changes which
/// rows are scored, so each test user's choice probabilities still normalize
/// over the whole market. Day schemes move whole days.
pub fn split(panel: &PanelDataset, scheme: &CvScheme) -> Result<Vec<Fold>> {
    scheme.validate()?;
    let k = scheme.folds;
    match scheme.kind {
        CvKind::ByUser10fold => {
            let mut users: Vec<u64> = panel
                .rows()
                .map(|r| r.user_id)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            if users.len() < k {
                return Err(Error::invalid(format!(
                    "{}: {} users for {k} folds",
                    scheme.kind.name(),
                    users.len()
                )));
            }
            users.shuffle(&mut seeded(scheme.seed));
            Ok((0..k)
                .map(|g| {
                    let test: BTreeSet<u64> = users
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| i % k == g)
                        .map(|(_, &u)| u)
                        .collect();
                    Fold {
                        train: panel.filter_rows(|r| !test.contains(&r.user_id)),
                        test: panel.restrict_users(&test),
                    }
                })
                .collect())
        }
        CvKind::ByDay10fold => {
            let mut days: Vec<usize> = (0..panel.day_count()).collect();
            if days.len() < k {
                return Err(Error::invalid(format!(
                    "{}: {} days for {k} folds",
                    scheme.kind.name(),
                    days.len()
                )));
            }
            days.shuffle(&mut seeded(scheme.seed));
            Ok((0..k)
                .map(|g| {
                    let (test, train): (Vec<_>, Vec<_>) = days.iter().enumerate().partition(|(i, _)| i % k == g);
                    let pick = |v: Vec<(usize, &usize)>| v.into_iter().map(|(_, &d)| d).collect::<Vec<_>>();
                    Fold {
                        train: panel.select_days(&pick(train)),
                        test: panel.select_days(&pick(test)),
                    }
                })
                .collect())
        }
        CvKind::TemporalLastFraction => {
            let n_days = panel.day_count();
            if n_days < 2 {
                return Err(Error::invalid(format!(
                    "{}: need at least 2 days, got {n_days}",
                    scheme.kind.name()
                )));
            }
            let total = panel.scored_rows() as f64;
            let target = scheme.fraction * total;
            let mut acc = 0usize;
            let mut first_test = n_days;
            while first_test > 0 && (acc as f64) < target {
                first_test -= 1;
                acc += panel.days()[first_test].scored_count();
            }
            if first_test == 0 {
                return Err(Error::invalid(format!(
                    "{}: fraction {} leaves no training days",
                    scheme.kind.name(),
                    scheme.fraction
                )));
            }
            let train: Vec<usize> = (0..first_test).collect();
            let test: Vec<usize> = (first_test..n_days).collect();
            Ok(vec![Fold {
                train: panel.select_days(&train),
                test: panel.select_days(&test),
            }])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyScore {
    pub family: ModelFamily,
    pub mae: f64,
    pub mse: f64,
    pub f_score: f64,
    pub n_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeErrorRow {
    pub family: ModelFamily,
    pub baseline: ModelFamily,
    /// Share of rows where `family`'s absolute residual exceeds the baseline's.
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldFit {
    pub family: ModelFamily,
    pub model: ModelSpec,
    pub log_likelihood: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub index: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub skipped: Option<String>,
    pub fits: Vec<FoldFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub scheme: CvScheme,
    pub families: Vec<FamilyScore>,
    pub relative_errors: Vec<RelativeErrorRow>,
    pub folds: Vec<FoldSummary>,
}

pub const REPORT_CSV_HEADER: [&str; 4] = ["scheme", "family", "metric", "value"];

impl ErrorReport {
    pub fn score(&self, family: ModelFamily) -> Option<&FamilyScore> {
        self.families.iter().find(|s| s.family == family)
    }

    pub fn relative(&self, family: ModelFamily) -> Option<f64> {
        self.relative_errors
            .iter()
            .find(|r| r.family == family)
            .map(|r| r.relative_error)
    }

    /// Long format: one `(scheme, family, metric, value)` row per number.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(REPORT_CSV_HEADER)?;
        let scheme = self.scheme.kind.name();
        for s in &self.families {
            for (metric, value) in [
                ("mae", s.mae),
                ("mse", s.mse),
                ("f_score", s.f_score),
                ("n_rows", s.n_rows as f64),
            ] {
                w.write_record([scheme, s.family.name(), metric, &value.to_string()])?;
            }
        }
        for r in &self.relative_errors {
            let metric = format!("relative_error_vs_{}", r.baseline.name());
            w.write_record([scheme, r.family.name(), &metric, &r.relative_error.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("error report", e))?;
        Ok(())
    }
}

struct FoldOutcome {
    summary: FoldSummary,
    actual: Vec<u64>,
    /// One prediction vector per family, aligned with `actual`.
    predictions: Vec<Vec<f64>>,
}

fn run_fold(index: usize, fold: &Fold, families: &[ModelFamily]) -> Result<FoldOutcome> {
    let mut summary = FoldSummary {
        index,
        train_rows: fold.train.scored_rows(),
        test_rows: fold.test.scored_rows(),
        skipped: None,
        fits: Vec::new(),
    };
    let skip = |summary: FoldSummary, why: &str| FoldOutcome {
        summary: FoldSummary {
            skipped: Some(why.to_string()),
            ..summary
        },
        actual: Vec::new(),
        predictions: vec![Vec::new(); families.len()],
    };
    if !fold.test.has_decisions() {
        return Ok(skip(summary, "test set has no new mimickers"));
    }
    if !fold.train.has_decisions() {
        return Ok(skip(summary, "training set has no new mimickers"));
    }
    let fits = families
        .par_iter()
        .map(|&f| fit(f, &fold.train).map(|r| (f, r)))
        .collect::<Result<Vec<_>>>()?;
    let predictions = fits
        .iter()
        .map(|(_, r)| predict_panel(&r.model, &fold.test))
        .collect::<Result<Vec<_>>>()?;
    summary.fits = fits
        .into_iter()
        .map(|(family, r)| FoldFit {
            family,
            model: r.model,
            log_likelihood: r.log_likelihood,
            converged: r.converged,
        })
        .collect();
    Ok(FoldOutcome {
        summary,
        actual: fold.test.rows().map(|r| r.new_mimickers).collect(),
        predictions,
    })
}

/// Fit each family on every training fold, predict the held-out rows given
/// each day's actual total, and pool the residuals.
///
/// Folds whose test or training rows contain no new mimickers are skipped
/// and listed as such. Relative errors compare every other family against
/// social sampling when it is among `families`.
pub fn cross_validate(families: &[ModelFamily], panel: &PanelDataset, scheme: &CvScheme) -> Result<ErrorReport> {
    let mut unique: Vec<ModelFamily> = Vec::new();
    for &f in families {
        if !unique.contains(&f) {
            unique.push(f);
        }
    }
    if unique.is_empty() {
        return Err(Error::invalid("no model families to compare"));
    }
    let folds = split(panel, scheme)?;
    let outcomes = folds
        .par_iter()
        .enumerate()
        .map(|(i, f)| run_fold(i, f, &unique))
        .collect::<Result<Vec<_>>>()?;

    let actual: Vec<u64> = outcomes.iter().flat_map(|o| o.actual.iter().copied()).collect();
    if actual.is_empty() {
        return Err(Error::invalid(format!(
            "{}: every fold was skipped",
            scheme.kind.name()
        )));
    }
    let mut residuals: Vec<Vec<f64>> = Vec::with_capacity(unique.len());
    let mut scores = Vec::with_capacity(unique.len());
    for (j, &family) in unique.iter().enumerate() {
        let pred: Vec<f64> = outcomes.iter().flat_map(|o| o.predictions[j].iter().copied()).collect();
        let m = error_metrics(&pred, &actual)?;
        residuals.push(pred.iter().zip(&actual).map(|(p, &a)| (p - a as f64).abs()).collect());
        scores.push(FamilyScore {
            family,
            mae: m.mae,
            mse: m.mse,
            f_score: m.f_score,
            n_rows: actual.len(),
        });
    }
    let mut relative_errors = Vec::new();
    if let Some(b) = unique.iter().position(|&f| f == ModelFamily::SocialSampling) {
        for (j, &family) in unique.iter().enumerate() {
            if j != b {
                relative_errors.push(RelativeErrorRow {
                    family,
                    baseline: ModelFamily::SocialSampling,
                    relative_error: relative_error(&residuals[j], &residuals[b])?,
                });
            }
        }
    }
    Ok(ErrorReport {
        scheme: *scheme,
        families: scores,
        relative_errors,
        folds: outcomes.into_iter().map(|o| o.summary).collect(),
    })
}
