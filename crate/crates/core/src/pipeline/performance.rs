use std::collections::{BTreeMap, HashMap};

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use super::trades::TradeRecord;
use super::TradeCalendar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerformanceMetric {
    /// Mean per-trade return, profit / amount invested.
    Roi,
    /// Mean return over its sample standard deviation.
    Sharpe,
    /// Mean return over the sample standard deviation of the negative returns.
    Sortino,
    /// Total profit.
    Sum,
    /// Total profit over total amount invested.
    Average,
    /// Share of trades with positive profit, minus one half.
    Percent,
}

impl PerformanceMetric {
    pub const ALL: [PerformanceMetric; 6] = [
        PerformanceMetric::Roi,
        PerformanceMetric::Sharpe,
        PerformanceMetric::Sortino,
        PerformanceMetric::Sum,
        PerformanceMetric::Average,
        PerformanceMetric::Percent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PerformanceMetric::Roi => "roi",
            PerformanceMetric::Sharpe => "sharpe",
            PerformanceMetric::Sortino => "sortino",
            PerformanceMetric::Sum => "sum",
            PerformanceMetric::Average => "average",
            PerformanceMetric::Percent => "percent",
        }
    }
}

impl std::str::FromStr for PerformanceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown performance metric {s:?}")))
    }
}

/// Which columns determine a trade's profit and invested amount.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmountSource {
    /// `net_profit` and `amount_invested` as logged.
    #[default]
    Recorded,
    /// `units · (close_rate − open_rate)` and `units · open_rate / leverage`.
    Units,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceMetricSpec {
    pub kind: PerformanceMetric,
    #[serde(default = "default_window")]
    pub window_days: u32,
    #[serde(default = "default_true")]
    pub closed_trades_only: bool,
    #[serde(default)]
    pub amount_source: AmountSource,
}

fn default_window() -> u32 {
    30
}

fn default_true() -> bool {
    true
}

impl Default for PerformanceMetricSpec {
    fn default() -> Self {
        Self {
            kind: PerformanceMetric::Roi,
            window_days: default_window(),
            closed_trades_only: true,
            amount_source: AmountSource::Recorded,
        }
    }
}

impl PerformanceMetricSpec {
    pub fn new(kind: PerformanceMetric) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_days == 0 {
            return Err(Error::invalid("performance window must be at least one day"));
        }
        Ok(())
    }
}

/// Per-user performance on every calendar day; `None` marks an undefined
/// score (no qualifying trades or a zero denominator).
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceTable {
    pub calendar: TradeCalendar,
    pub spec: PerformanceMetricSpec,
    values: BTreeMap<u64, Vec<Option<f64>>>,
}

impl PerformanceTable {
    pub fn get(&self, user: u64, date: NaiveDate) -> Option<f64> {
        let idx = self.calendar.index_of(date)?;
        self.values.get(&user).and_then(|v| v[idx])
    }

    /// Users with at least one own trade, ascending.
    pub fn users(&self) -> impl Iterator<Item = u64> + '_ {
        self.values.keys().copied()
    }
}

/// Profit and invested amount of one trade as seen at the end of a day.
fn trade_value(t: &TradeRecord, source: AmountSource, mark: Option<f64>) -> (f64, f64) {
    let closed_rate = mark.or(t.close_rate).unwrap_or(t.open_rate);
    match (source, mark) {
        (AmountSource::Recorded, None) => (t.net_profit.unwrap_or(0.0), t.amount_invested),
        (AmountSource::Recorded, Some(_)) => (t.units * (closed_rate - t.open_rate), t.amount_invested),
        (AmountSource::Units, _) => (
            t.units * (closed_rate - t.open_rate),
            t.units * t.open_rate / t.leverage,
        ),
    }
}

fn sample_sd(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    Some((xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

/// Score one user-day from its qualifying `(profit, amount)` pairs, summed
/// in the given order.
pub fn metric_value(kind: PerformanceMetric, trades: &[(f64, f64)]) -> Option<f64> {
    if trades.is_empty() {
        return None;
    }
    let n = trades.len() as f64;
    let returns = || -> Option<Vec<f64>> {
        trades
            .iter()
            .map(|&(p, a)| if a != 0.0 { Some(p / a) } else { None })
            .collect()
    };
    let finite = |x: f64| if x.is_finite() { Some(x) } else { None };
    match kind {
        PerformanceMetric::Roi => {
            let r = returns()?;
            finite(r.iter().sum::<f64>() / n)
        }
        PerformanceMetric::Sharpe => {
            let r = returns()?;
            let sd = sample_sd(&r).filter(|s| *s > 0.0)?;
            finite(r.iter().sum::<f64>() / n / sd)
        }
        PerformanceMetric::Sortino => {
            let r = returns()?;
            let negatives: Vec<f64> = r.iter().copied().filter(|x| *x < 0.0).collect();
            let sd = sample_sd(&negatives).filter(|s| *s > 0.0)?;
            finite(r.iter().sum::<f64>() / n / sd)
        }
        PerformanceMetric::Sum => Some(trades.iter().map(|t| t.0).sum()),
        PerformanceMetric::Average => {
            let invested: f64 = trades.iter().map(|t| t.1).sum();
            if invested == 0.0 {
                return None;
            }
            finite(trades.iter().map(|t| t.0).sum::<f64>() / invested)
        }
        PerformanceMetric::Percent => Some(trades.iter().filter(|t| t.0 > 0.0).count() as f64 / n - 0.5),
    }
}

/// Last observed rate per asset on or before a date. Observations are open
/// and close rates on their dates; within a day, later trade IDs and close
/// observations win.
struct RateBook {
    by_asset: HashMap<String, BTreeMap<(NaiveDate, u64, u8), f64>>,
}

impl RateBook {
    fn new(trades: &[TradeRecord]) -> Self {
        let mut by_asset: HashMap<String, BTreeMap<(NaiveDate, u64, u8), f64>> = HashMap::new();
        for t in trades {
            let book = by_asset.entry(t.asset.clone()).or_default();
            book.insert((t.open_date, t.trade_id, 0), t.open_rate);
            if let (Some(d), Some(r)) = (t.close_date, t.close_rate) {
                book.insert((d, t.trade_id, 1), r);
            }
        }
        Self { by_asset }
    }

    fn last_on_or_before(&self, asset: &str, date: NaiveDate) -> Option<f64> {
        self.by_asset
            .get(asset)?
            .range(..=(date, u64::MAX, u8::MAX))
            .next_back()
            .map(|(_, r)| *r)
    }
}

/// Score every user on every calendar day from that user's own trades
/// (copies excluded) in the trailing window `[d − W, d − 1]`.
///
/// With `closed_trades_only`, a trade qualifies when it closed inside the
/// window. Otherwise trades opened inside the window qualify, and those
/// still open at the end of `d − 1` are marked to the asset's last observed
/// rate.
pub fn compute_performance(trades: &[TradeRecord], spec: &PerformanceMetricSpec) -> Result<PerformanceTable> {
    spec.validate()?;
    let calendar = TradeCalendar::from_trades(trades)?;
    let rates = (!spec.closed_trades_only).then(|| RateBook::new(trades));
    let mut own: BTreeMap<u64, Vec<&TradeRecord>> = BTreeMap::new();
    for t in trades.iter().filter(|t| !t.is_copy()) {
        own.entry(t.user_id).or_default().push(t);
    }
    let w = spec.window_days as u64;
    let mut values = BTreeMap::new();
    for (user, mut list) in own {
        let key = |t: &TradeRecord| {
            if spec.closed_trades_only {
                t.close_date
            } else {
                Some(t.open_date)
            }
        };
        list.retain(|t| key(t).is_some());
        list.sort_by_key(|t| (key(t), t.trade_id));
        let mut series = Vec::with_capacity(calendar.len());
        let (mut lo, mut hi) = (0usize, 0usize);
        for day in calendar.days() {
            let from = day.checked_sub_days(Days::new(w)).expect("date in range");
            let until = day.pred_opt().expect("date in range");
            while hi < list.len() && key(list[hi]).expect("retained") <= until {
                hi += 1;
            }
            while lo < hi && key(list[lo]).expect("retained") < from {
                lo += 1;
            }
            let window: Vec<(f64, f64)> = list[lo..hi]
                .iter()
                .map(|t| {
                    let mark = match &rates {
                        Some(book) if t.close_date.is_none_or(|c| c > until) => book.last_on_or_before(&t.asset, until),
                        _ => None,
                    };
                    trade_value(t, spec.amount_source, mark)
                })
                .collect();
            series.push(metric_value(spec.kind, &window));
        }
        values.insert(user, series);
    }
    Ok(PerformanceTable {
        calendar,
        spec: *spec,
        values,
    })
}

/// Net profit per user per close date from the user's own closed trades,
/// in date order. Days without closed trades are omitted.
pub fn daily_profits(trades: &[TradeRecord]) -> BTreeMap<u64, Vec<f64>> {
    let mut by_day: BTreeMap<u64, BTreeMap<NaiveDate, f64>> = BTreeMap::new();
    for t in trades.iter().filter(|t| !t.is_copy()) {
        if let (Some(d), Some(p)) = (t.close_date, t.net_profit) {
            *by_day.entry(t.user_id).or_default().entry(d).or_default() += p;
        }
    }
    by_day
        .into_iter()
        .map(|(u, days)| (u, days.into_values().collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2011, m, d).unwrap()
    }

    fn closed(id: u64, user: u64, open: NaiveDate, close: NaiveDate, amount: f64, profit: f64) -> TradeRecord {
        TradeRecord {
            trade_id: id,
            user_id: user,
            open_date: open,
            close_date: Some(close),
            asset: "X".into(),
            amount_invested: amount,
            units: amount,
            leverage: 1.0,
            open_rate: 1.0,
            close_rate: Some(1.0 + profit / amount),
            net_profit: Some(profit),
            parent_trade_id: None,
            mirror_id: None,
            imputed: false,
        }
    }

    #[test]
    fn single_trade_roi_window() {
        let mut trades = vec![closed(1, 5, date(6, 1), date(6, 1), 100.0, 5.0)];
        // stretch the calendar well past the window
        trades.push(closed(2, 6, date(8, 30), date(8, 30), 1.0, 0.0));
        let table = compute_performance(&trades, &PerformanceMetricSpec::default()).unwrap();
        assert_eq!(table.get(5, date(6, 1)), None);
        for day in date(6, 2).iter_days().take(30) {
            assert_eq!(table.get(5, day), Some(0.05), "{day}");
        }
        assert_eq!(table.get(5, date(7, 2)), None);
    }

    #[test]
    fn metric_fixtures() {
        let t = [(1.0, 10.0), (-1.0, 10.0), (1.0, 10.0)];
        assert!((metric_value(PerformanceMetric::Percent, &t).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(metric_value(PerformanceMetric::Sum, &t), Some(1.0));
        assert!((metric_value(PerformanceMetric::Average, &t).unwrap() - 1.0 / 30.0).abs() < 1e-15);
        assert!((metric_value(PerformanceMetric::Roi, &t).unwrap() - 0.1 / 3.0).abs() < 1e-15);
        // returns 0.1, -0.1, 0.1: mean 1/30, sd sqrt(0.04/3)
        let sharpe = (0.1 / 3.0) / (0.04f64 / 3.0).sqrt();
        assert!((metric_value(PerformanceMetric::Sharpe, &t).unwrap() - sharpe).abs() < 1e-12);
        // a single negative return has no spread
        assert_eq!(metric_value(PerformanceMetric::Sortino, &t), None);
        let s = [(1.0, 10.0), (-1.0, 10.0), (-3.0, 10.0)];
        let sortino = (-0.3 / 3.0) / (0.02f64).sqrt();
        assert!((metric_value(PerformanceMetric::Sortino, &s).unwrap() - sortino).abs() < 1e-12);
    }

    #[test]
    fn degenerate_denominators_are_undefined() {
        assert_eq!(
            metric_value(PerformanceMetric::Sharpe, &[(1.0, 10.0), (1.0, 10.0)]),
            None
        );
        assert_eq!(metric_value(PerformanceMetric::Average, &[(1.0, 0.0)]), None);
        assert_eq!(metric_value(PerformanceMetric::Roi, &[(1.0, 0.0)]), None);
        for m in PerformanceMetric::ALL {
            assert_eq!(metric_value(m, &[]), None);
        }
    }

    #[test]
    fn copies_do_not_count_and_profits_group_by_day() {
        let mut copy = closed(3, 5, date(6, 1), date(6, 1), 10.0, 9.0);
        copy.parent_trade_id = Some(1);
        let trades = vec![
            closed(1, 5, date(6, 1), date(6, 1), 100.0, 5.0),
            closed(2, 5, date(6, 1), date(6, 1), 100.0, -7.0),
            copy,
            closed(4, 5, date(6, 3), date(6, 3), 100.0, 2.0),
        ];
        let table = compute_performance(&trades, &PerformanceMetricSpec::new(PerformanceMetric::Sum)).unwrap();
        assert_eq!(table.get(5, date(6, 2)), Some(-2.0));
        assert_eq!(daily_profits(&trades)[&5], vec![-2.0, 2.0]);
    }

    #[test]
    fn liquidation_marks_open_trades() {
        let mut open = closed(1, 5, date(6, 1), date(6, 1), 100.0, 0.0);
        open.close_date = None;
        open.close_rate = None;
        open.net_profit = None;
        // another user's trade observes the asset at 1.1 on 06-02
        let other = TradeRecord {
            trade_id: 2,
            user_id: 6,
            close_rate: Some(1.1),
            ..closed(2, 6, date(6, 2), date(6, 2), 1.0, 0.0)
        };
        let trades = vec![open, other, closed(3, 7, date(6, 30), date(6, 30), 1.0, 0.0)];
        let closed_only = compute_performance(&trades, &PerformanceMetricSpec::default()).unwrap();
        assert_eq!(closed_only.get(5, date(6, 3)), None);
        let spec = PerformanceMetricSpec {
            closed_trades_only: false,
            ..PerformanceMetricSpec::default()
        };
        let liquid = compute_performance(&trades, &spec).unwrap();
        assert_eq!(liquid.get(5, date(6, 2)), Some(0.0));
        let roi = liquid.get(5, date(6, 3)).unwrap();
        assert!((roi - 0.1).abs() < 1e-12, "{roi}");
    }

    #[test]
    fn units_source_recomputes_profit() {
        let mut t = closed(1, 5, date(6, 1), date(6, 1), 100.0, 5.0);
        t.units = 50.0;
        t.leverage = 2.0;
        t.open_rate = 2.0;
        t.close_rate = Some(2.2);
        let spec = PerformanceMetricSpec {
            kind: PerformanceMetric::Average,
            amount_source: AmountSource::Units,
            ..PerformanceMetricSpec::default()
        };
        let later = closed(2, 6, date(6, 30), date(6, 30), 1.0, 0.0);
        let table = compute_performance(&[t, later], &spec).unwrap();
        // profit 50 * 0.2 = 10, amount 50 * 2 / 2 = 50
        assert!((table.get(5, date(6, 2)).unwrap() - 0.2).abs() < 1e-12);
    }
}
