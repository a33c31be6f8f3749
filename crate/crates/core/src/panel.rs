//! User-day panel: for every day, each active user's performance, previous
//! popularity, and mimickers gained and lost.
//!
//! CSV schema (header required):
//! `day,user_id,performance,prev_popularity,new_mimickers,lost_mimickers`,
//! with `day` as an ISO-8601 date. Rows are written grouped by day and sorted
//! by user ID within a day.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::MarketSnapshot;

pub const PANEL_HEADER: [&str; 6] = [
    "day",
    "user_id",
    "performance",
    "prev_popularity",
    "new_mimickers",
    "lost_mimickers",
];

/// One day of the panel. The snapshot always covers every active user that
/// day; `scored` marks which rows belong to this panel's sample (all rows
/// unless the panel was produced by a user-level split or a row filter).
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDay {
    pub date: NaiveDate,
    pub user_ids: Vec<u64>,
    pub snapshot: MarketSnapshot,
    pub new_mimickers: Vec<u64>,
    pub lost_mimickers: Vec<u64>,
    pub scored: Vec<bool>,
}

impl PanelDay {
    pub fn new(
        date: NaiveDate,
        user_ids: Vec<u64>,
        snapshot: MarketSnapshot,
        new_mimickers: Vec<u64>,
        lost_mimickers: Vec<u64>,
    ) -> Result<Self> {
        let m = snapshot.active_count();
        if user_ids.len() != m || new_mimickers.len() != m || lost_mimickers.len() != m {
            return Err(Error::invalid(format!(
                "panel day {date}: {m} options but {} users, {} new counts, {} lost counts",
                user_ids.len(),
                new_mimickers.len(),
                lost_mimickers.len()
            )));
        }
        let distinct: BTreeSet<_> = user_ids.iter().collect();
        if distinct.len() != m {
            return Err(Error::Integrity(format!("panel day {date} repeats a user ID")));
        }
        Ok(Self {
            date,
            user_ids,
            snapshot,
            new_mimickers,
            lost_mimickers,
            scored: vec![true; m],
        })
    }

    /// Total new mimic decisions that day across all active users.
    pub fn total_new(&self) -> u64 {
        self.new_mimickers.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.user_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.user_ids.is_empty()
    }

    pub fn scored_count(&self) -> usize {
        self.scored.iter().filter(|&&s| s).count()
    }
}

/// A single panel row, as yielded by [`PanelDataset::rows`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub day_index: usize,
    pub row_index: usize,
    pub date: NaiveDate,
    pub user_id: u64,
    pub performance: f64,
    pub prev_popularity: u64,
    pub new_mimickers: u64,
    pub lost_mimickers: u64,
}

impl PanelRow {
    /// `new - lost`, the day's change in popularity.
    pub fn net_change(&self) -> f64 {
        self.new_mimickers as f64 - self.lost_mimickers as f64
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PanelDataset {
    days: Vec<PanelDay>,
}

impl PanelDataset {
    pub fn new(days: Vec<PanelDay>) -> Result<Self> {
        for pair in days.windows(2) {
            if pair[0].date >= pair[1].date {
                return Err(Error::Integrity(format!(
                    "panel days out of order: {} then {}",
                    pair[0].date, pair[1].date
                )));
            }
        }
        Ok(Self { days })
    }

    pub fn days(&self) -> &[PanelDay] {
        &self.days
    }

    pub fn day_count(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    /// Scored rows in day order, then in user order within a day.
    pub fn rows(&self) -> impl Iterator<Item = PanelRow> + '_ {
        self.days.iter().enumerate().flat_map(|(d, day)| {
            (0..day.len()).filter(move |&i| day.scored[i]).map(move |i| PanelRow {
                day_index: d,
                row_index: i,
                date: day.date,
                user_id: day.user_ids[i],
                performance: day.snapshot.performance()[i],
                prev_popularity: day.snapshot.popularity()[i],
                new_mimickers: day.new_mimickers[i],
                lost_mimickers: day.lost_mimickers[i],
            })
        })
    }

    pub fn scored_rows(&self) -> usize {
        self.days.iter().map(PanelDay::scored_count).sum()
    }

    /// Distinct user IDs over all days, ascending.
    pub fn user_ids(&self) -> Vec<u64> {
        let set: BTreeSet<u64> = self.days.iter().flat_map(|d| d.user_ids.iter().copied()).collect();
        set.into_iter().collect()
    }

    /// Sub-panel made of the given days (indices into `days()`), in order.
    pub fn select_days(&self, indices: &[usize]) -> Self {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        Self {
            days: idx.into_iter().map(|i| self.days[i].clone()).collect(),
        }
    }

    /// Keep every day, but only score rows whose user is in `users`. Days
    /// left with no scored rows are dropped.
    pub fn restrict_users(&self, users: &BTreeSet<u64>) -> Self {
        self.filter_rows(|row| users.contains(&row.user_id))
    }

    /// Unscore rows that fail `keep`; drop days with nothing left.
    pub fn filter_rows<F: Fn(&PanelRow) -> bool>(&self, keep: F) -> Self {
        let mut days = Vec::with_capacity(self.days.len());
        for (d, day) in self.days.iter().enumerate() {
            let mut day = day.clone();
            for i in 0..day.len() {
                if !day.scored[i] {
                    continue;
                }
                let row = PanelRow {
                    day_index: d,
                    row_index: i,
                    date: day.date,
                    user_id: day.user_ids[i],
                    performance: day.snapshot.performance()[i],
                    prev_popularity: day.snapshot.popularity()[i],
                    new_mimickers: day.new_mimickers[i],
                    lost_mimickers: day.lost_mimickers[i],
                };
                day.scored[i] = keep(&row);
            }
            if day.scored_count() > 0 {
                days.push(day);
            }
        }
        Self { days }
    }

    /// True when at least one day has a positive number of new mimickers
    /// among its scored rows.
    pub fn has_decisions(&self) -> bool {
        self.rows().any(|r| r.new_mimickers > 0)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(PANEL_HEADER)?;
        for day in &self.days {
            let date = day.date.format("%Y-%m-%d").to_string();
            for i in 0..day.len() {
                out.write_record([
                    date.clone(),
                    day.user_ids[i].to_string(),
                    day.snapshot.performance()[i].to_string(),
                    day.snapshot.popularity()[i].to_string(),
                    day.new_mimickers[i].to_string(),
                    day.lost_mimickers[i].to_string(),
                ])?;
            }
        }
        out.flush().map_err(|e| Error::io("<panel csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Parse a panel CSV. Errors carry the 1-based data row and column.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.iter().map(str::trim).ne(PANEL_HEADER.iter().copied()) {
            return Err(Error::invalid(format!(
                "panel header must be `{}`, got `{}`",
                PANEL_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        type Row = (u64, f64, u64, u64, u64);
        let mut by_day: BTreeMap<NaiveDate, Vec<Row>> = BTreeMap::new();
        for (n, record) in rdr.records().enumerate() {
            let row = n + 1;
            let record = record?;
            let field = |col: usize| -> Result<&str> {
                record
                    .get(col)
                    .map(str::trim)
                    .ok_or_else(|| Error::invalid(format!("panel row {row}: missing column {}", PANEL_HEADER[col])))
            };
            let bad = |col: usize, v: &str| {
                Error::invalid(format!(
                    "panel row {row}, column {}: cannot parse `{v}`",
                    PANEL_HEADER[col]
                ))
            };
            let date = NaiveDate::parse_from_str(field(0)?, "%Y-%m-%d").map_err(|_| bad(0, field(0).unwrap_or("")))?;
            let user: u64 = field(1)?.parse().map_err(|_| bad(1, field(1).unwrap_or("")))?;
            let perf: f64 = field(2)?.parse().map_err(|_| bad(2, field(2).unwrap_or("")))?;
            if !perf.is_finite() {
                return Err(bad(2, field(2)?));
            }
            let prev: u64 = field(3)?.parse().map_err(|_| bad(3, field(3).unwrap_or("")))?;
            let new: u64 = field(4)?.parse().map_err(|_| bad(4, field(4).unwrap_or("")))?;
            let lost: u64 = field(5)?.parse().map_err(|_| bad(5, field(5).unwrap_or("")))?;
            by_day.entry(date).or_default().push((user, perf, prev, new, lost));
        }
        let mut days = Vec::with_capacity(by_day.len());
        for (index, (date, mut rows)) in by_day.into_iter().enumerate() {
            rows.sort_by_key(|r| r.0);
            let snapshot = MarketSnapshot::new(
                index as u32,
                rows.iter().map(|r| r.2).collect(),
                rows.iter().map(|r| r.1).collect(),
            )?;
            days.push(PanelDay::new(
                date,
                rows.iter().map(|r| r.0).collect(),
                snapshot,
                rows.iter().map(|r| r.3).collect(),
                rows.iter().map(|r| r.4).collect(),
            )?);
        }
        Self::new(days)
    }

    pub fn read_csv_path(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn write_csv_path(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
