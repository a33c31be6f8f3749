use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::trades::TradeRecord;

/// Median of a non-empty slice; the mean of the middle pair for even length.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnimputableParent {
    pub parent_trade_id: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imputation {
    /// Input records unchanged, followed by the reconstructed parents in
    /// ascending trade ID.
    pub trades: Vec<TradeRecord>,
    pub imputed_ids: Vec<u64>,
    pub unimputable: Vec<UnimputableParent>,
}

/// Rebuild parent trades that copies refer to but the log lacks.
///
/// Each mirror's copy ratio is the median of copy units over parent units
/// across its observed pairs. Every copy of a missing parent whose mirror
/// has a ratio proposes `copy units / ratio`; the parent's units are the
/// median proposal. Dates, asset, rates and leverage come from the
/// lowest-ID contributing copy, the owner is that mirror's target, and
/// profit and amount follow from the units and rates.
pub fn impute_missing_parents(trades: &[TradeRecord]) -> Imputation {
    let by_id: HashMap<u64, &TradeRecord> = trades.iter().map(|t| (t.trade_id, t)).collect();

    let mut pair_ratios: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    let mut mirror_target: HashMap<u64, u64> = HashMap::new();
    let mut orphans: BTreeMap<u64, Vec<&TradeRecord>> = BTreeMap::new();
    for t in trades {
        let Some(pid) = t.parent_trade_id else { continue };
        match by_id.get(&pid) {
            Some(parent) => {
                if let Some(m) = t.mirror_id {
                    mirror_target.entry(m).or_insert(parent.user_id);
                    if parent.units != 0.0 {
                        pair_ratios.entry(m).or_default().push(t.units / parent.units);
                    }
                }
            }
            None => orphans.entry(pid).or_default().push(t),
        }
    }
    let ratios: HashMap<u64, f64> = pair_ratios
        .into_iter()
        .filter_map(|(m, r)| median(&r).filter(|x| *x != 0.0 && x.is_finite()).map(|x| (m, x)))
        .collect();

    let mut out = trades.to_vec();
    let mut imputed_ids = Vec::new();
    let mut unimputable = Vec::new();
    for (pid, mut copies) in orphans {
        copies.sort_by_key(|t| t.trade_id);
        let usable: Vec<(&TradeRecord, f64)> = copies
            .iter()
            .filter_map(|c| c.mirror_id.and_then(|m| ratios.get(&m)).map(|&r| (*c, r)))
            .collect();
        let Some(&(template, _)) = usable.first() else {
            unimputable.push(UnimputableParent {
                parent_trade_id: pid,
                reason: format!(
                    "none of its {} copies belongs to a mirror with an observed parent/copy pair",
                    copies.len()
                ),
            });
            continue;
        };
        let proposals: Vec<f64> = usable.iter().map(|(c, r)| c.units / r).collect();
        let units = median(&proposals).expect("at least one proposal");
        let owner = template
            .mirror_id
            .and_then(|m| mirror_target.get(&m))
            .copied()
            .expect("mirror with a ratio has a target");
        let net_profit = template.close_rate.map(|close| units * (close - template.open_rate));
        out.push(TradeRecord {
            trade_id: pid,
            user_id: owner,
            open_date: template.open_date,
            close_date: template.close_date,
            asset: template.asset.clone(),
            amount_invested: units * template.open_rate / template.leverage,
            units,
            leverage: template.leverage,
            open_rate: template.open_rate,
            close_rate: template.close_rate,
            net_profit,
            parent_trade_id: None,
            mirror_id: None,
            imputed: true,
        });
        imputed_ids.push(pid);
    }
    Imputation {
        trades: out,
        imputed_ids,
        unimputable,
    }
}
