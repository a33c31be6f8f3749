//! Trade-log processing: parsing, mimic-relationship reconstruction,
//! performance scores, parent-trade imputation, panel assembly, and a
//! synthetic market generator with known ground truth.

mod impute;
mod performance;
mod popularity;
mod synthetic;
mod trades;

pub use impute::{impute_missing_parents, median, Imputation, UnimputableParent};
pub use performance::{
    compute_performance, daily_profits, metric_value, AmountSource, PerformanceMetric, PerformanceMetricSpec,
    PerformanceTable,
};
pub use popularity::{reconstruct_popularity, MirrorInterval, Popularity};
pub use synthetic::{
    generate_synthetic_market, generate_synthetic_panel, DayTotals, GroundTruth, SkillDistribution, SyntheticMarket,
    SyntheticMarketConfig, UserSkill, FOLLOWER_ID_OFFSET,
};
pub use trades::{
    parse_trades, parse_trades_path, write_trades, write_trades_path, Diagnostic, ParsedTrades, TradeRecord,
    MAX_MALFORMED_FRACTION, TRADE_HEADER,
};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::MarketSnapshot;
use crate::panel::{PanelDataset, PanelDay};

pub fn is_weekend(date: NaiveDate) -> bool {
    matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}

/// Closest earlier Monday-to-Friday date.
pub fn previous_weekday(date: NaiveDate) -> NaiveDate {
    let mut d = date.pred_opt().expect("date in range");
    while is_weekend(d) {
        d = d.pred_opt().expect("date in range");
    }
    d
}

/// Inclusive range of calendar days spanned by a trade log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeCalendar {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl TradeCalendar {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::invalid(format!(
                "calendar ends ({end}) before it starts ({start})"
            )));
        }
        Ok(Self { start, end })
    }

    /// From the earliest open date to the latest open or close date.
    pub fn from_trades(trades: &[TradeRecord]) -> Result<Self> {
        let start = trades
            .iter()
            .map(|t| t.open_date)
            .min()
            .ok_or_else(|| Error::invalid("trade log has no records"))?;
        let end = trades
            .iter()
            .map(|t| t.close_date.unwrap_or(t.open_date).max(t.open_date))
            .max()
            .expect("non-empty");
        Self::new(start, end)
    }

    pub fn len(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        (self.start <= date && date <= self.end).then(|| (date - self.start).num_days() as usize)
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.start.iter_days().take(self.len())
    }
}

/// One row per user-day with defined performance, on weekdays at least
/// `warmup_days` after the calendar start.
///
/// Previous popularity is the count on the previous weekday, so a Monday row
/// looks back to Friday. New and lost mimickers cover the days after that
/// weekday up to and including the row's day, which keeps
/// `new − lost = popularity(d) − popularity(previous weekday)`.
pub fn build_panel(
    popularity: &Popularity,
    performance: &PerformanceTable,
    calendar: &TradeCalendar,
    warmup_days: u32,
) -> Result<PanelDataset> {
    if performance.calendar != *calendar {
        return Err(Error::Integrity(format!(
            "performance covers {}..{} but the calendar is {}..{}",
            performance.calendar.start, performance.calendar.end, calendar.start, calendar.end
        )));
    }
    let first = calendar
        .start
        .checked_add_days(Days::new(warmup_days as u64))
        .expect("date in range");
    let users: Vec<u64> = performance.users().collect();
    let mut days = Vec::new();
    for date in calendar.days().filter(|d| *d >= first && !is_weekend(*d)) {
        let prev = previous_weekday(date);
        let (mut ids, mut pop, mut perf, mut new, mut lost) = (vec![], vec![], vec![], vec![], vec![]);
        for &u in &users {
            let Some(q) = performance.get(u, date) else { continue };
            ids.push(u);
            perf.push(q);
            pop.push(popularity.count(u, prev));
            new.push(popularity.new_between(u, prev, date));
            lost.push(popularity.lost_between(u, prev, date));
        }
        if ids.is_empty() {
            continue;
        }
        let snapshot = MarketSnapshot::new(days.len() as u32, pop, perf)?;
        days.push(PanelDay::new(date, ids, snapshot, new, lost)?);
    }
    PanelDataset::new(days)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub metric: PerformanceMetricSpec,
    /// Reconstruct missing parent trades before anything else.
    pub impute: bool,
}

#[derive(Debug, Clone)]
pub struct IngestOutput {
    pub panel: PanelDataset,
    pub imputed_ids: Vec<u64>,
    pub unimputable: Vec<UnimputableParent>,
    pub unresolved_mirrors: Vec<u64>,
    pub mirror_count: usize,
}

/// Trades to panel: optional imputation, popularity and performance
/// reconstruction, then assembly with the metric window as warm-up.
pub fn ingest(trades: &[TradeRecord], options: &IngestOptions) -> Result<IngestOutput> {
    let (trades, imputed_ids, unimputable) = if options.impute {
        let imp = impute_missing_parents(trades);
        (imp.trades, imp.imputed_ids, imp.unimputable)
    } else {
        (trades.to_vec(), Vec::new(), Vec::new())
    };
    let popularity = reconstruct_popularity(&trades)?;
    let performance = compute_performance(&trades, &options.metric)?;
    let calendar = TradeCalendar::from_trades(&trades)?;
    let panel = build_panel(&popularity, &performance, &calendar, options.metric.window_days)?;
    Ok(IngestOutput {
        panel,
        imputed_ids,
        unimputable,
        unresolved_mirrors: popularity.unresolved_mirrors().to_vec(),
        mirror_count: popularity.intervals().len(),
    })
}
