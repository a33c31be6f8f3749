use std::collections::{BTreeMap, HashMap};

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use super::trades::TradeRecord;
use crate::error::{Error, Result};

/// One mimic relationship, active from `first_date` through `last_date`
/// inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MirrorInterval {
    pub mirror_id: u64,
    pub mimicker_user: u64,
    pub target_user: u64,
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
}

/// Mirror intervals plus per-target event counts by calendar day.
///
/// A relationship counts toward popularity on every day of its interval,
/// adds a new mimicker on `first_date` and loses one on `last_date + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Popularity {
    intervals: Vec<MirrorInterval>,
    /// Mirrors whose target could not be identified because none of their
    /// trades has an observed parent.
    unresolved_mirrors: Vec<u64>,
    starts: HashMap<u64, BTreeMap<NaiveDate, u64>>,
    ends: HashMap<u64, BTreeMap<NaiveDate, u64>>,
}

fn count_in(events: Option<&BTreeMap<NaiveDate, u64>>, after: NaiveDate, upto: NaiveDate) -> u64 {
    match events {
        Some(m) if after < upto => m
            .range((std::ops::Bound::Excluded(after), std::ops::Bound::Included(upto)))
            .map(|(_, c)| c)
            .sum(),
        _ => 0,
    }
}

fn count_upto(events: Option<&BTreeMap<NaiveDate, u64>>, upto: NaiveDate) -> u64 {
    events.map(|m| m.range(..=upto).map(|(_, c)| c).sum()).unwrap_or(0)
}

impl Popularity {
    pub fn from_intervals(mut intervals: Vec<MirrorInterval>) -> Self {
        intervals.sort_by_key(|m| m.mirror_id);
        let mut starts: HashMap<u64, BTreeMap<NaiveDate, u64>> = HashMap::new();
        let mut ends: HashMap<u64, BTreeMap<NaiveDate, u64>> = HashMap::new();
        for m in &intervals {
            *starts
                .entry(m.target_user)
                .or_default()
                .entry(m.first_date)
                .or_default() += 1;
            let end = m.last_date.checked_add_days(Days::new(1)).expect("date in range");
            *ends.entry(m.target_user).or_default().entry(end).or_default() += 1;
        }
        Self {
            intervals,
            unresolved_mirrors: Vec::new(),
            starts,
            ends,
        }
    }

    pub fn intervals(&self) -> &[MirrorInterval] {
        &self.intervals
    }

    pub fn unresolved_mirrors(&self) -> &[u64] {
        &self.unresolved_mirrors
    }

    /// Mimickers of `user` on `date`.
    pub fn count(&self, user: u64, date: NaiveDate) -> u64 {
        count_upto(self.starts.get(&user), date) - count_upto(self.ends.get(&user), date)
    }

    /// Relationships starting in `(after, upto]`.
    pub fn new_between(&self, user: u64, after: NaiveDate, upto: NaiveDate) -> u64 {
        count_in(self.starts.get(&user), after, upto)
    }

    /// Relationships whose decrement day `last_date + 1` falls in `(after, upto]`.
    pub fn lost_between(&self, user: u64, after: NaiveDate, upto: NaiveDate) -> u64 {
        count_in(self.ends.get(&user), after, upto)
    }

    /// Mimicker counts for `user` on each day from `from` through `to`.
    pub fn daily_counts(&self, user: u64, from: NaiveDate, to: NaiveDate) -> Vec<u64> {
        from.iter_days()
            .take_while(|d| *d <= to)
            .map(|d| self.count(user, d))
            .collect()
    }
}

/// Build one interval per mirror ID from the dates its copy trades are
/// observed (open and close dates), and index them by target user.
///
/// The target is the owner of a copy's parent trade. Mirrors none of whose
/// copies has an observed parent are listed as unresolved.
pub fn reconstruct_popularity(trades: &[TradeRecord]) -> Result<Popularity> {
    let owner: HashMap<u64, u64> = trades.iter().map(|t| (t.trade_id, t.user_id)).collect();
    struct Acc {
        mimicker: u64,
        target: Option<u64>,
        first: NaiveDate,
        last: NaiveDate,
    }
    let mut mirrors: BTreeMap<u64, Acc> = BTreeMap::new();
    for t in trades {
        let Some(mirror_id) = t.mirror_id else { continue };
        let target = t.parent_trade_id.and_then(|p| owner.get(&p).copied());
        let last = t.close_date.unwrap_or(t.open_date).max(t.open_date);
        match mirrors.get_mut(&mirror_id) {
            None => {
                mirrors.insert(
                    mirror_id,
                    Acc {
                        mimicker: t.user_id,
                        target,
                        first: t.open_date,
                        last,
                    },
                );
            }
            Some(acc) => {
                if acc.mimicker != t.user_id {
                    return Err(Error::Integrity(format!(
                        "mirror_id {mirror_id} links mimicker {} in one trade and {} in trade {}",
                        acc.mimicker, t.user_id, t.trade_id
                    )));
                }
                match (acc.target, target) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(Error::Integrity(format!(
                            "mirror_id {mirror_id} copies user {a} in one trade and user {b} in trade {}",
                            t.trade_id
                        )));
                    }
                    (None, Some(b)) => acc.target = Some(b),
                    _ => {}
                }
                acc.first = acc.first.min(t.open_date);
                acc.last = acc.last.max(last);
            }
        }
    }
    let mut intervals = Vec::with_capacity(mirrors.len());
    let mut unresolved = Vec::new();
    for (mirror_id, acc) in mirrors {
        match acc.target {
            Some(target_user) => intervals.push(MirrorInterval {
                mirror_id,
                mimicker_user: acc.mimicker,
                target_user,
                first_date: acc.first,
                last_date: acc.last,
            }),
            None => unresolved.push(mirror_id),
        }
    }
    let mut pop = Popularity::from_intervals(intervals);
    pop.unresolved_mirrors = unresolved;
    Ok(pop)
}
