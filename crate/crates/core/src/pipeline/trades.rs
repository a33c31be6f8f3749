use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRADE_HEADER: [&str; 13] = [
    "trade_id",
    "user_id",
    "open_date",
    "close_date",
    "asset",
    "amount_invested",
    "units",
    "leverage",
    "open_rate",
    "close_rate",
    "net_profit",
    "parent_trade_id",
    "mirror_id",
];

/// Share of malformed rows above which a whole log is rejected.
pub const MAX_MALFORMED_FRACTION: f64 = 0.10;

const DATE_FORMAT: &str = "%Y-%m-%d";

/// One row of a trade log. A trade with no `close_date` is still open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub trade_id: u64,
    pub user_id: u64,
    pub open_date: NaiveDate,
    pub close_date: Option<NaiveDate>,
    pub asset: String,
    pub amount_invested: f64,
    pub units: f64,
    pub leverage: f64,
    pub open_rate: f64,
    pub close_rate: Option<f64>,
    pub net_profit: Option<f64>,
    pub parent_trade_id: Option<u64>,
    pub mirror_id: Option<u64>,
    /// Reconstructed by imputation rather than read from a log.
    #[serde(default)]
    pub imputed: bool,
}

impl TradeRecord {
    pub fn is_closed(&self) -> bool {
        self.close_date.is_some()
    }

    pub fn is_copy(&self) -> bool {
        self.parent_trade_id.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// 1-based line in the source file (the header is line 1).
    pub line: u64,
    pub column: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.column {
            Some(c) => write!(f, "line {}, column {}: {}", self.line, c, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

/// Parsed log: accepted records, records held back because their fields
/// contradict each other, and one diagnostic per rejected or held-back row.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParsedTrades {
    pub records: Vec<TradeRecord>,
    pub quarantined: Vec<TradeRecord>,
    pub diagnostics: Vec<Diagnostic>,
    pub total_rows: usize,
}

struct Row<'a> {
    record: &'a csv::StringRecord,
    line: u64,
}

impl Row<'_> {
    fn field(&self, i: usize) -> &str {
        self.record.get(i).unwrap_or("").trim()
    }

    fn fail(&self, i: usize, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            line: self.line,
            column: Some(TRADE_HEADER[i].to_string()),
            message: message.into(),
        }
    }

    fn u64_at(&self, i: usize) -> std::result::Result<u64, Diagnostic> {
        let s = self.field(i);
        s.parse()
            .map_err(|_| self.fail(i, format!("expected a non-negative integer, got {s:?}")))
    }

    fn opt_u64_at(&self, i: usize) -> std::result::Result<Option<u64>, Diagnostic> {
        if self.field(i).is_empty() {
            Ok(None)
        } else {
            self.u64_at(i).map(Some)
        }
    }

    fn f64_at(&self, i: usize) -> std::result::Result<f64, Diagnostic> {
        let s = self.field(i);
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.fail(i, format!("expected a finite number, got {s:?}"))),
        }
    }

    fn opt_f64_at(&self, i: usize) -> std::result::Result<Option<f64>, Diagnostic> {
        if self.field(i).is_empty() {
            Ok(None)
        } else {
            self.f64_at(i).map(Some)
        }
    }

    fn date_at(&self, i: usize) -> std::result::Result<NaiveDate, Diagnostic> {
        let s = self.field(i);
        NaiveDate::parse_from_str(s, DATE_FORMAT)
            .map_err(|_| self.fail(i, format!("expected a YYYY-MM-DD date, got {s:?}")))
    }

    fn opt_date_at(&self, i: usize) -> std::result::Result<Option<NaiveDate>, Diagnostic> {
        if self.field(i).is_empty() {
            Ok(None)
        } else {
            self.date_at(i).map(Some)
        }
    }

    fn parse(&self) -> std::result::Result<TradeRecord, Diagnostic> {
        if self.record.len() != TRADE_HEADER.len() {
            return Err(Diagnostic {
                line: self.line,
                column: None,
                message: format!("expected {} fields, found {}", TRADE_HEADER.len(), self.record.len()),
            });
        }
        let asset = self.field(4).to_string();
        if asset.is_empty() {
            return Err(self.fail(4, "asset symbol is empty"));
        }
        let leverage = self.f64_at(7)?;
        if leverage <= 0.0 {
            return Err(self.fail(7, format!("leverage must be positive, got {leverage}")));
        }
        let record = TradeRecord {
            trade_id: self.u64_at(0)?,
            user_id: self.u64_at(1)?,
            open_date: self.date_at(2)?,
            close_date: self.opt_date_at(3)?,
            asset,
            amount_invested: self.f64_at(5)?,
            units: self.f64_at(6)?,
            leverage,
            open_rate: self.f64_at(8)?,
            close_rate: self.opt_f64_at(9)?,
            net_profit: self.opt_f64_at(10)?,
            parent_trade_id: self.opt_u64_at(11)?,
            mirror_id: self.opt_u64_at(12)?,
            imputed: false,
        };
        if record.is_closed() {
            if record.close_rate.is_none() {
                return Err(self.fail(9, "closed trade has no close rate"));
            }
            if record.net_profit.is_none() {
                return Err(self.fail(10, "closed trade has no net profit"));
            }
        }
        if record.mirror_id.is_some() && record.parent_trade_id.is_none() {
            return Err(self.fail(11, "mirror_id is set but parent_trade_id is empty"));
        }
        Ok(record)
    }
}

/// Read a trade log.
///
/// Each bad row yields a diagnostic with its line and column. A row whose
/// close date precedes its open date parses but is quarantined. More than
/// 10% bad or quarantined rows aborts the whole parse.
pub fn parse_trades<R: Read>(reader: R) -> Result<ParsedTrades> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != TRADE_HEADER {
        return Err(Error::invalid(format!(
            "trade log header must be {:?}, found {:?}",
            TRADE_HEADER.join(","),
            names.join(",")
        )));
    }
    let mut out = ParsedTrades::default();
    let mut seen = HashSet::new();
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                out.total_rows += 1;
                out.diagnostics.push(Diagnostic {
                    line,
                    column: None,
                    message: format!("unreadable row: {e}"),
                });
                if !matches!(e.kind(), csv::ErrorKind::Utf8 { .. }) {
                    return Err(Error::Csv(e));
                }
                continue;
            }
        }
        out.total_rows += 1;
        let row = Row {
            line: record.position().map(|p| p.line()).unwrap_or(0),
            record: &record,
        };
        match row.parse() {
            Err(d) => out.diagnostics.push(d),
            Ok(t) if !seen.insert(t.trade_id) => out
                .diagnostics
                .push(row.fail(0, format!("duplicate trade_id {}", t.trade_id))),
            Ok(t) => match t.close_date {
                Some(close) if close < t.open_date => {
                    out.diagnostics.push(row.fail(
                        3,
                        format!(
                            "closed date {close} occurs before open date {}; record quarantined",
                            t.open_date
                        ),
                    ));
                    out.quarantined.push(t);
                }
                _ => out.records.push(t),
            },
        }
    }
    let malformed = out.diagnostics.len();
    if malformed as f64 > MAX_MALFORMED_FRACTION * out.total_rows as f64 {
        return Err(Error::TooManyMalformed {
            malformed,
            total: out.total_rows,
            first: out.diagnostics[0].to_string(),
        });
    }
    Ok(out)
}

pub fn parse_trades_path(path: &Path) -> Result<ParsedTrades> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_trades(std::io::BufReader::new(file))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write records in log order. The imputed flag is not part of the format.
pub fn write_trades<W: Write>(records: &[TradeRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRADE_HEADER)?;
    for t in records {
        w.write_record([
            t.trade_id.to_string(),
            t.user_id.to_string(),
            t.open_date.format(DATE_FORMAT).to_string(),
            opt(t.close_date.map(|d| d.format(DATE_FORMAT))),
            t.asset.clone(),
            t.amount_invested.to_string(),
            t.units.to_string(),
            t.leverage.to_string(),
            t.open_rate.to_string(),
            opt(t.close_rate),
            opt(t.net_profit),
            opt(t.parent_trade_id),
            opt(t.mirror_id),
        ])?;
    }
    w.flush().map_err(|e| Error::io("trade log", e))?;
    Ok(())
}

pub fn write_trades_path(records: &[TradeRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_trades(records, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "trade_id,user_id,open_date,close_date,asset,amount_invested,units,leverage,open_rate,close_rate,net_profit,parent_trade_id,mirror_id\n";

    #[test]
    fn empty_log_is_empty() {
        let p = parse_trades(HEADER.as_bytes()).unwrap();
        assert!(p.records.is_empty() && p.diagnostics.is_empty());
        assert_eq!(p.total_rows, 0);
    }

    #[test]
    fn optional_fields() {
        let text = format!(
            "{HEADER}1,10,2011-06-01,2011-06-02,EURUSD,100,100,1,1.2,1.3,5,,\n\
             2,11,2011-06-01,2011-06-02,EURUSD,50,50,1,1.2,1.3,2.5,1,7\n\
             3,12,2011-06-01,2011-06-02,EURUSD,20,20,1,1.2,1.3,1,1,\n"
        );
        let p = parse_trades(text.as_bytes()).unwrap();
        assert_eq!(p.records.len(), 3);
        assert_eq!(p.records[1].mirror_id, Some(7));
        assert_eq!(p.records[2].mirror_id, None);
        assert_eq!(p.records[2].parent_trade_id, Some(1));
    }

    #[test]
    fn inverted_dates_are_quarantined() {
        let mut text = HEADER.to_string();
        for i in 0..10 {
            text.push_str(&format!("{i},1,2011-06-05,2011-06-06,X,1,1,1,1,1,0,,\n"));
        }
        text.push_str("99,1,2011-06-05,2011-06-01,X,1,1,1,1,1,0,,\n");
        let p = parse_trades(text.as_bytes()).unwrap();
        assert_eq!(p.records.len(), 10);
        assert_eq!(p.quarantined.len(), 1);
        assert_eq!(p.diagnostics.len(), 1);
        let d = &p.diagnostics[0];
        assert_eq!(d.line, 12);
        assert!(d.message.contains("before open date"), "{d}");
    }

    #[test]
    fn too_many_bad_rows_abort() {
        let text = format!("{HEADER}1,1,2011-06-05,,X,1,1,1,1,,,,\nx,1,2011-06-05,,X,1,1,1,1,,,,\n");
        match parse_trades(text.as_bytes()) {
            Err(Error::TooManyMalformed {
                malformed,
                total,
                first,
            }) => {
                assert_eq!((malformed, total), (1, 2));
                assert!(first.contains("line 3, column trade_id"), "{first}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn structural_problems_are_diagnosed() {
        let rows = [
            ("1,1,2011-06-05,2011-06-06,X,1,1,1,1,,0,,", "close_rate"),
            ("1,1,2011-06-05,,X,1,1,1,1,,,,4", "parent_trade_id"),
            ("1,1,2011-13-05,,X,1,1,1,1,,,,", "open_date"),
            ("1,1,2011-06-05,,X,1,1,0,1,,,,", "leverage"),
            ("1,1,2011-06-05,,X,1,1,1", ""),
        ];
        for (row, column) in rows {
            let mut text = HEADER.to_string();
            for i in 100..120 {
                text.push_str(&format!("{i},1,2011-06-05,,X,1,1,1,1,,,,\n"));
            }
            text.push_str(row);
            text.push('\n');
            let p = parse_trades(text.as_bytes()).unwrap();
            assert_eq!(p.diagnostics.len(), 1, "{row}");
            assert_eq!(p.diagnostics[0].column.clone().unwrap_or_default(), column);
        }
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(parse_trades("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn write_then_parse_round_trips() {
        let t = TradeRecord {
            trade_id: 4,
            user_id: 9,
            open_date: NaiveDate::from_ymd_opt(2011, 6, 1).unwrap(),
            close_date: None,
            asset: "GOLD, spot".into(),
            amount_invested: 0.1 + 0.2,
            units: 1e-7,
            leverage: 10.0,
            open_rate: 1234.5678,
            close_rate: None,
            net_profit: None,
            parent_trade_id: Some(2),
            mirror_id: Some(3),
            imputed: false,
        };
        let mut buf = Vec::new();
        write_trades(std::slice::from_ref(&t), &mut buf).unwrap();
        let p = parse_trades(buf.as_slice()).unwrap();
        assert_eq!(p.records, vec![t]);
    }
}
