//! Parsing and validation of transaction, price, and headline inputs.
//!
//! Everything downstream works on a common trading-day calendar derived from
//! the price file. Headlines go through three ordered steps before scoring:
//! deduplication (first release wins), trading-hours filtering, and
//! bucketing by calendar day. Deduplication always runs before the hours
//! filter so that the first release decides window membership.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Read};

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeZone, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Trading window open, in minutes after UTC midnight (08:00).
pub const TRADING_OPEN_MINUTE: u32 = 8 * 60;
/// Trading window close, in minutes after UTC midnight (16:30).
pub const TRADING_CLOSE_MINUTE: u32 = 16 * 60 + 30;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("row {row}: {message}")]
    MalformedRow { row: u64, message: String },
    #[error("missing required column `{column}` in header")]
    MissingColumn { column: String },
    #[error("row {row}: unknown investor category `{token}`")]
    UnknownCategory { row: u64, token: String },
    #[error("duplicate transaction key ({investor_id}, {day})")]
    DuplicateTransaction { investor_id: String, day: NaiveDate },
    #[error("row {row}: negative volume for investor {investor_id}")]
    NegativeVolume { row: u64, investor_id: String },
    #[error("row {row}: {message}")]
    BadPrice { row: u64, message: String },
    #[error("duplicate price record for day {day}")]
    DuplicatePriceDay { day: NaiveDate },
    #[error("line {line}: {message}")]
    BadHeadline { line: u64, message: String },
    #[error("line {line}: naive timestamp `{value}` but no timezone offset rules were supplied")]
    NaiveTimestamp { line: u64, value: String },
    #[error("line {line}: timestamp {value} not covered by any offset rule")]
    UncoveredTimestamp { line: u64, value: String },
    #[error("drop_last_minutes must be below 510, got {0}")]
    InvalidDropMinutes(u32),
    #[error("trading calendar is empty")]
    EmptyCalendar,
    #[error("trading calendar days must be strictly increasing (offending day {0})")]
    NonIncreasingCalendar(NaiveDate),
}

/// The six investor categories used by the per-category aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InvestorCategory {
    Companies,
    Financial,
    Governmental,
    NonProfit,
    Households,
    Foreign,
}

impl InvestorCategory {
    pub const ALL: [InvestorCategory; 6] = [
        InvestorCategory::Companies,
        InvestorCategory::Financial,
        InvestorCategory::Governmental,
        InvestorCategory::NonProfit,
        InvestorCategory::Households,
        InvestorCategory::Foreign,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            InvestorCategory::Companies => "Companies",
            InvestorCategory::Financial => "Financial",
            InvestorCategory::Governmental => "Governmental",
            InvestorCategory::NonProfit => "NonProfit",
            InvestorCategory::Households => "Households",
            InvestorCategory::Foreign => "Foreign",
        }
    }

    /// Case-insensitive match ignoring spaces, hyphens, and underscores, so
    /// feeds writing "Non profit" or "non-profit" map to the same value.
    pub fn parse_token(token: &str) -> Option<InvestorCategory> {
        let normalized: String = token
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '-' && *c != '_')
            .flat_map(|c| c.to_lowercase())
            .collect();
        match normalized.as_str() {
            "companies" => Some(InvestorCategory::Companies),
            "financial" => Some(InvestorCategory::Financial),
            "governmental" => Some(InvestorCategory::Governmental),
            "nonprofit" => Some(InvestorCategory::NonProfit),
            "households" => Some(InvestorCategory::Households),
            "foreign" => Some(InvestorCategory::Foreign),
            _ => None,
        }
    }
}

impl std::fmt::Display for InvestorCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for InvestorCategory {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InvestorCategory::parse_token(s).ok_or_else(|| format!("unknown investor category `{s}`"))
    }
}

/// One investor-day observation of bought and sold volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub investor_id: String,
    pub category: InvestorCategory,
    pub day: NaiveDate,
    pub volume_bought: f64,
    pub volume_sold: f64,
}

/// Daily close/high/low prices. `close` is allowed to print outside the
/// high/low range (proxy feeds do this); `low <= high` is enforced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceRecord {
    pub day: NaiveDate,
    pub close: f64,
    pub high: f64,
    pub low: f64,
}

/// A timestamped headline. Text is normalized on construction: trimmed and
/// internal whitespace collapsed to single spaces. No case folding, so
/// distinct-case headlines stay distinct.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadlineRecord {
    pub timestamp: DateTime<Utc>,
    pub text: String,
}

impl HeadlineRecord {
    pub fn new(timestamp: DateTime<Utc>, text: &str) -> Option<HeadlineRecord> {
        let text = normalize_headline_text(text);
        if text.is_empty() {
            return None;
        }
        Some(HeadlineRecord { timestamp, text })
    }
}

fn normalize_headline_text(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Strictly increasing list of trading days, taken from the price file.
#[derive(Debug, Clone)]
pub struct TradingCalendar {
    days: Vec<NaiveDate>,
    index: HashMap<NaiveDate, usize>,
}

impl TradingCalendar {
    pub fn from_days(days: Vec<NaiveDate>) -> Result<TradingCalendar, IngestError> {
        if days.is_empty() {
            return Err(IngestError::EmptyCalendar);
        }
        for pair in days.windows(2) {
            if pair[1] <= pair[0] {
                return Err(IngestError::NonIncreasingCalendar(pair[1]));
            }
        }
        let index = days.iter().enumerate().map(|(i, d)| (*d, i)).collect();
        Ok(TradingCalendar { days, index })
    }

    pub fn from_prices(prices: &[PriceRecord]) -> Result<TradingCalendar, IngestError> {
        TradingCalendar::from_days(prices.iter().map(|p| p.day).collect())
    }

    pub fn contains(&self, day: NaiveDate) -> bool {
        self.index.contains_key(&day)
    }

    pub fn index_of(&self, day: NaiveDate) -> Option<usize> {
        self.index.get(&day).copied()
    }

    pub fn days(&self) -> &[NaiveDate] {
        &self.days
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }
}

/// Column names mapping a transaction file's header to record fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransactionSchema {
    pub investor_id: String,
    pub category: String,
    pub day: String,
    pub volume_bought: String,
    pub volume_sold: String,
}

impl Default for TransactionSchema {
    fn default() -> Self {
        TransactionSchema {
            investor_id: "investor_id".into(),
            category: "category".into(),
            day: "day".into(),
            volume_bought: "volume_bought".into(),
            volume_sold: "volume_sold".into(),
        }
    }
}

/// Fixed-rule local-to-UTC offsets, for feeds whose timestamps are local
/// wall-clock time. Each rule covers an inclusive date range with a fixed
/// offset east of UTC in minutes; first matching rule wins.
#[derive(Debug, Clone, Default)]
pub struct TzOffsetRules {
    rules: Vec<(NaiveDate, NaiveDate, i32)>,
}

impl TzOffsetRules {
    /// Parse rules from CSV with columns `start_day,end_day,offset_minutes`.
    pub fn from_reader<R: Read>(reader: R) -> Result<TzOffsetRules, IngestError> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = csv.headers()?.clone();
        let col = |name: &str| -> Result<usize, IngestError> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| IngestError::MissingColumn { column: name.into() })
        };
        let (c_start, c_end, c_off) = (col("start_day")?, col("end_day")?, col("offset_minutes")?);
        let mut rules = Vec::new();
        for (i, row) in csv.records().enumerate() {
            let row = row?;
            let line = i as u64 + 2;
            let parse_day = |s: &str| {
                NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| IngestError::MalformedRow {
                    row: line,
                    message: format!("bad date `{s}`: {e}"),
                })
            };
            let start = parse_day(&row[c_start])?;
            let end = parse_day(&row[c_end])?;
            let offset: i32 = row[c_off].parse().map_err(|e| IngestError::MalformedRow {
                row: line,
                message: format!("bad offset `{}`: {e}", &row[c_off]),
            })?;
            rules.push((start, end, offset));
        }
        Ok(TzOffsetRules { rules })
    }

    pub fn to_utc(&self, local: NaiveDateTime) -> Option<DateTime<Utc>> {
        let day = local.date();
        self.rules
            .iter()
            .find(|(start, end, _)| day >= *start && day <= *end)
            .map(|(_, _, offset)| Utc.from_utc_datetime(&(local - chrono::Duration::minutes(*offset as i64))))
    }
}

/// Parse a delimiter-separated transaction file with a header row.
///
/// Records with both volumes zero are retained; the classifier marks them
/// inactive. Duplicate (investor_id, day) keys are a hard error rather than
/// being merged, since merging would corrupt the buy/sell ratio.
pub fn parse_transactions<R: Read>(
    reader: R,
    schema: &TransactionSchema,
    delimiter: u8,
) -> Result<Vec<TransactionRecord>, IngestError> {
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let col = |name: &str| -> Result<usize, IngestError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn { column: name.into() })
    };
    let c_id = col(&schema.investor_id)?;
    let c_cat = col(&schema.category)?;
    let c_day = col(&schema.day)?;
    let c_buy = col(&schema.volume_bought)?;
    let c_sell = col(&schema.volume_sold)?;

    let mut records = Vec::new();
    let mut seen: HashMap<(String, NaiveDate), ()> = HashMap::new();
    for (i, row) in csv.records().enumerate() {
        let row = row?;
        let line = i as u64 + 2; // 1-based, after the header row
        let get = |c: usize| -> Result<&str, IngestError> {
            row.get(c).ok_or_else(|| IngestError::MalformedRow {
                row: line,
                message: format!("expected at least {} fields, got {}", c + 1, row.len()),
            })
        };
        let investor_id = get(c_id)?.to_string();
        if investor_id.is_empty() {
            return Err(IngestError::MalformedRow { row: line, message: "empty investor id".into() });
        }
        let cat_token = get(c_cat)?;
        let category = InvestorCategory::parse_token(cat_token)
            .ok_or_else(|| IngestError::UnknownCategory { row: line, token: cat_token.into() })?;
        let day = NaiveDate::parse_from_str(get(c_day)?, "%Y-%m-%d").map_err(|e| {
            IngestError::MalformedRow { row: line, message: format!("bad date: {e}") }
        })?;
        let parse_vol = |s: &str| -> Result<f64, IngestError> {
            s.parse::<f64>().map_err(|e| IngestError::MalformedRow {
                row: line,
                message: format!("bad volume `{s}`: {e}"),
            })
        };
        let volume_bought = parse_vol(get(c_buy)?)?;
        let volume_sold = parse_vol(get(c_sell)?)?;
        if !volume_bought.is_finite() || !volume_sold.is_finite() {
            return Err(IngestError::MalformedRow { row: line, message: "non-finite volume".into() });
        }
        if volume_bought < 0.0 || volume_sold < 0.0 {
            return Err(IngestError::NegativeVolume { row: line, investor_id });
        }
        if seen.insert((investor_id.clone(), day), ()).is_some() {
            return Err(IngestError::DuplicateTransaction { investor_id, day });
        }
        records.push(TransactionRecord { investor_id, category, day, volume_bought, volume_sold });
    }
    Ok(records)
}

/// Parse a price file with columns `day,close,high,low`.
pub fn parse_prices<R: Read>(reader: R, delimiter: u8) -> Result<Vec<PriceRecord>, IngestError> {
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let col = |name: &str| -> Result<usize, IngestError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn { column: name.into() })
    };
    let (c_day, c_close, c_high, c_low) = (col("day")?, col("close")?, col("high")?, col("low")?);
    let mut prices = Vec::new();
    let mut seen: HashMap<NaiveDate, ()> = HashMap::new();
    for (i, row) in csv.records().enumerate() {
        let row = row?;
        let line = i as u64 + 2;
        let day = NaiveDate::parse_from_str(&row[c_day], "%Y-%m-%d").map_err(|e| {
            IngestError::MalformedRow { row: line, message: format!("bad date: {e}") }
        })?;
        let parse_price = |c: usize, name: &str| -> Result<f64, IngestError> {
            let v: f64 = row[c].parse().map_err(|e| IngestError::MalformedRow {
                row: line,
                message: format!("bad {name} `{}`: {e}", &row[c]),
            })?;
            if !v.is_finite() || v <= 0.0 {
                return Err(IngestError::BadPrice {
                    row: line,
                    message: format!("{name} must be strictly positive, got {v}"),
                });
            }
            Ok(v)
        };
        let close = parse_price(c_close, "close")?;
        let high = parse_price(c_high, "high")?;
        let low = parse_price(c_low, "low")?;
        if low > high {
            return Err(IngestError::BadPrice {
                row: line,
                message: format!("low {low} exceeds high {high}"),
            });
        }
        if seen.insert(day, ()).is_some() {
            return Err(IngestError::DuplicatePriceDay { day });
        }
        prices.push(PriceRecord { day, close, high, low });
    }
    Ok(prices)
}

#[derive(Deserialize)]
struct RawHeadline {
    ts: String,
    text: String,
}

/// Parse a headline file. Each record is either a JSON object per line
/// (`{"ts": "...", "text": "..."}`) or a CSV row with `ts,text` columns;
/// the format is sniffed from the first non-empty line.
///
/// Timestamps must be RFC 3339 instants (converted to UTC). When `tz_rules`
/// is supplied, naive timestamps (`YYYY-MM-DDTHH:MM:SS` without an offset)
/// are interpreted as local wall-clock time and shifted to UTC by the
/// matching fixed-rule offset.
pub fn parse_headlines<R: BufRead>(
    reader: R,
    tz_rules: Option<&TzOffsetRules>,
) -> Result<Vec<HeadlineRecord>, IngestError> {
    let mut lines = Vec::new();
    for line in reader.lines() {
        lines.push(line?);
    }
    let first = lines.iter().find(|l| !l.trim().is_empty());
    let Some(first) = first else { return Ok(Vec::new()) };
    if first.trim_start().starts_with('{') {
        parse_headlines_jsonl(&lines, tz_rules)
    } else {
        parse_headlines_csv(&lines, tz_rules)
    }
}

fn parse_headline_timestamp(
    value: &str,
    line: u64,
    tz_rules: Option<&TzOffsetRules>,
) -> Result<DateTime<Utc>, IngestError> {
    if let Ok(ts) = DateTime::parse_from_rfc3339(value) {
        return Ok(ts.with_timezone(&Utc));
    }
    let naive = NaiveDateTime::parse_from_str(value, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(value, "%Y-%m-%d %H:%M:%S"));
    match naive {
        Ok(naive) => match tz_rules {
            Some(rules) => rules
                .to_utc(naive)
                .ok_or_else(|| IngestError::UncoveredTimestamp { line, value: value.into() }),
            None => Err(IngestError::NaiveTimestamp { line, value: value.into() }),
        },
        Err(e) => Err(IngestError::BadHeadline {
            line,
            message: format!("bad timestamp `{value}`: {e}"),
        }),
    }
}

fn parse_headlines_jsonl(
    lines: &[String],
    tz_rules: Option<&TzOffsetRules>,
) -> Result<Vec<HeadlineRecord>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let line_no = i as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawHeadline = serde_json::from_str(line).map_err(|e| IngestError::BadHeadline {
            line: line_no,
            message: format!("bad json: {e}"),
        })?;
        let timestamp = parse_headline_timestamp(&raw.ts, line_no, tz_rules)?;
        let record = HeadlineRecord::new(timestamp, &raw.text).ok_or(IngestError::BadHeadline {
            line: line_no,
            message: "empty headline text".into(),
        })?;
        out.push(record);
    }
    Ok(out)
}

fn parse_headlines_csv(
    lines: &[String],
    tz_rules: Option<&TzOffsetRules>,
) -> Result<Vec<HeadlineRecord>, IngestError> {
    let joined = lines.join("\n");
    let mut csv = csv::ReaderBuilder::new().from_reader(joined.as_bytes());
    let headers = csv.headers()?.clone();
    let col = |name: &str| -> Result<usize, IngestError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn { column: name.into() })
    };
    let (c_ts, c_text) = (col("ts")?, col("text")?);
    let mut out = Vec::new();
    for (i, row) in csv.records().enumerate() {
        let row = row?;
        let line_no = i as u64 + 2;
        let timestamp = parse_headline_timestamp(&row[c_ts], line_no, tz_rules)?;
        let record = HeadlineRecord::new(timestamp, &row[c_text]).ok_or(IngestError::BadHeadline {
            line: line_no,
            message: "empty headline text".into(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Collapse repeated releases of the same headline to the earliest release.
///
/// Headlines match on exact text (already whitespace-normalized). Output is
/// sorted by timestamp, then text. Idempotent.
pub fn dedupe_headlines(headlines: &[HeadlineRecord]) -> Vec<HeadlineRecord> {
    let mut first_release: BTreeMap<&str, &HeadlineRecord> = BTreeMap::new();
    for h in headlines {
        first_release
            .entry(h.text.as_str())
            .and_modify(|existing| {
                if h.timestamp < existing.timestamp {
                    *existing = h;
                }
            })
            .or_insert(h);
    }
    let mut out: Vec<HeadlineRecord> = first_release.values().map(|h| (*h).clone()).collect();
    out.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.text.cmp(&b.text)));
    out
}

/// Keep headlines whose wall-clock minute lies in `[08:00, 16:30 - drop]`.
///
/// Boundaries are inclusive by minute: with `drop_last_minutes = 0` a
/// headline at 16:30:59 is inside the window and one at 16:31:00 is not.
/// `drop_last_minutes = 10` reproduces the shortened 16:20 close.
pub fn filter_trading_hours(
    headlines: &[HeadlineRecord],
    drop_last_minutes: u32,
) -> Result<Vec<HeadlineRecord>, IngestError> {
    if drop_last_minutes >= 510 {
        return Err(IngestError::InvalidDropMinutes(drop_last_minutes));
    }
    let close_minute = TRADING_CLOSE_MINUTE - drop_last_minutes;
    Ok(headlines
        .iter()
        .filter(|h| {
            let t = h.timestamp.time();
            let minute_of_day = t.hour() * 60 + t.minute();
            (TRADING_OPEN_MINUTE..=close_minute).contains(&minute_of_day)
        })
        .cloned()
        .collect())
}

/// Headlines grouped by trading day, plus the count of headlines discarded
/// because they fell on non-trading days.
#[derive(Debug, Default)]
pub struct DayBuckets {
    pub buckets: BTreeMap<NaiveDate, Vec<HeadlineRecord>>,
    pub discarded: usize,
}

impl DayBuckets {
    pub fn total_bucketed(&self) -> usize {
        self.buckets.values().map(|v| v.len()).sum()
    }
}

/// Assign each headline to its UTC calendar day, dropping (and tallying)
/// headlines dated outside the trading calendar.
pub fn bucket_headlines_by_day(
    headlines: &[HeadlineRecord],
    calendar: &TradingCalendar,
) -> DayBuckets {
    let mut result = DayBuckets::default();
    for h in headlines {
        let day = h.timestamp.date_naive();
        if calendar.contains(day) {
            result.buckets.entry(day).or_default().push(h.clone());
        } else {
            result.discarded += 1;
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> DateTime<Utc> {
        DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
    }

    fn hl(s: &str, text: &str) -> HeadlineRecord {
        HeadlineRecord::new(ts(s), text).unwrap()
    }

    #[test]
    fn parse_transactions_basic_row() {
        let data = "investor_id,category,day,volume_bought,volume_sold\n\
                    A1,Households,2003-01-02,100,0\n";
        let recs = parse_transactions(data.as_bytes(), &TransactionSchema::default(), b',').unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].investor_id, "A1");
        assert_eq!(recs[0].category, InvestorCategory::Households);
        assert_eq!(recs[0].day, NaiveDate::from_ymd_opt(2003, 1, 2).unwrap());
        assert_eq!(recs[0].volume_bought, 100.0);
        assert_eq!(recs[0].volume_sold, 0.0);
    }

    #[test]
    fn parse_transactions_unknown_category() {
        let data = "investor_id,category,day,volume_bought,volume_sold\n\
                    A1,Martian,2003-01-02,100,0\n";
        let err = parse_transactions(data.as_bytes(), &TransactionSchema::default(), b',').unwrap_err();
        assert!(matches!(err, IngestError::UnknownCategory { token, .. } if token == "Martian"));
    }

    #[test]
    fn parse_transactions_duplicate_key() {
        let data = "investor_id,category,day,volume_bought,volume_sold\n\
                    A1,Households,2003-01-02,100,0\n\
                    A1,Households,2003-01-02,50,0\n";
        let err = parse_transactions(data.as_bytes(), &TransactionSchema::default(), b',').unwrap_err();
        assert!(matches!(err, IngestError::DuplicateTransaction { .. }));
    }

    #[test]
    fn parse_transactions_negative_volume() {
        let data = "investor_id,category,day,volume_bought,volume_sold\n\
                    A1,Households,2003-01-02,-1,0\n";
        let err = parse_transactions(data.as_bytes(), &TransactionSchema::default(), b',').unwrap_err();
        assert!(matches!(err, IngestError::NegativeVolume { .. }));
    }

    #[test]
    fn parse_transactions_zero_volume_retained() {
        let data = "investor_id,category,day,volume_bought,volume_sold\n\
                    A1,Foreign,2003-01-02,0,0\n";
        let recs = parse_transactions(data.as_bytes(), &TransactionSchema::default(), b',').unwrap();
        assert_eq!(recs.len(), 1);
    }

    #[test]
    fn parse_transactions_custom_schema() {
        let schema = TransactionSchema {
            investor_id: "id".into(),
            category: "kind".into(),
            day: "date".into(),
            volume_bought: "buy".into(),
            volume_sold: "sell".into(),
        };
        let data = "id,kind,date,buy,sell\nB2,non profit,2004-06-01,3,7\n";
        let recs = parse_transactions(data.as_bytes(), &schema, b',').unwrap();
        assert_eq!(recs[0].category, InvestorCategory::NonProfit);
        assert_eq!(recs[0].volume_sold, 7.0);
    }

    #[test]
    fn parse_prices_validates() {
        let ok = "day,close,high,low\n2003-01-02,15.0,15.5,14.5\n";
        let prices = parse_prices(ok.as_bytes(), b',').unwrap();
        assert_eq!(prices.len(), 1);

        let low_gt_high = "day,close,high,low\n2003-01-02,15.0,14.0,14.5\n";
        assert!(matches!(
            parse_prices(low_gt_high.as_bytes(), b',').unwrap_err(),
            IngestError::BadPrice { .. }
        ));

        let nonpositive = "day,close,high,low\n2003-01-02,0.0,14.0,13.5\n";
        assert!(matches!(
            parse_prices(nonpositive.as_bytes(), b',').unwrap_err(),
            IngestError::BadPrice { .. }
        ));

        // close outside [low, high] is tolerated
        let proxy = "day,close,high,low\n2003-01-02,16.0,15.5,14.5\n";
        assert!(parse_prices(proxy.as_bytes(), b',').is_ok());
    }

    #[test]
    fn parse_prices_duplicate_day() {
        let data = "day,close,high,low\n2003-01-02,15.0,15.5,14.5\n2003-01-02,15.1,15.6,14.6\n";
        assert!(matches!(
            parse_prices(data.as_bytes(), b',').unwrap_err(),
            IngestError::DuplicatePriceDay { .. }
        ));
    }

    #[test]
    fn parse_headlines_jsonl_and_csv() {
        let jsonl = r#"{"ts": "2003-01-02T09:15:00Z", "text": "  spaced   out  headline "}"#;
        let parsed = parse_headlines(jsonl.as_bytes(), None).unwrap();
        assert_eq!(parsed[0].text, "spaced out headline");
        assert_eq!(parsed[0].timestamp, ts("2003-01-02T09:15:00Z"));

        let csv = "ts,text\n2003-01-02T09:15:00Z,plain headline\n";
        let parsed = parse_headlines(csv.as_bytes(), None).unwrap();
        assert_eq!(parsed[0].text, "plain headline");
    }

    #[test]
    fn parse_headlines_naive_requires_rules() {
        let jsonl = r#"{"ts": "2003-07-02T09:15:00", "text": "local time"}"#;
        assert!(matches!(
            parse_headlines(jsonl.as_bytes(), None).unwrap_err(),
            IngestError::NaiveTimestamp { .. }
        ));

        let rules_csv = "start_day,end_day,offset_minutes\n2003-03-30,2003-10-25,60\n";
        let rules = TzOffsetRules::from_reader(rules_csv.as_bytes()).unwrap();
        let parsed = parse_headlines(jsonl.as_bytes(), Some(&rules)).unwrap();
        // 09:15 local at UTC+60min -> 08:15 UTC
        assert_eq!(parsed[0].timestamp, ts("2003-07-02T08:15:00Z"));

        let winter = r#"{"ts": "2003-01-02T09:15:00", "text": "uncovered"}"#;
        assert!(matches!(
            parse_headlines(winter.as_bytes(), Some(&rules)).unwrap_err(),
            IngestError::UncoveredTimestamp { .. }
        ));
    }

    #[test]
    fn dedupe_keeps_first_release() {
        let input = vec![hl("2003-01-02T11:00:00Z", "X"), hl("2003-01-02T10:00:00Z", "X")];
        let out = dedupe_headlines(&input);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].timestamp, ts("2003-01-02T10:00:00Z"));
    }

    #[test]
    fn dedupe_distinct_texts_retained() {
        let input = vec![hl("2003-01-02T10:00:00Z", "X"), hl("2003-01-02T10:00:00Z", "Y")];
        assert_eq!(dedupe_headlines(&input).len(), 2);
    }

    #[test]
    fn dedupe_empty_and_idempotent() {
        assert!(dedupe_headlines(&[]).is_empty());
        let input = vec![
            hl("2003-01-02T11:00:00Z", "X"),
            hl("2003-01-02T10:00:00Z", "X"),
            hl("2003-01-03T09:00:00Z", "Y"),
        ];
        let once = dedupe_headlines(&input);
        let twice = dedupe_headlines(&once);
        assert_eq!(once, twice);
    }

    #[test]
    fn filter_window_boundaries() {
        let before_open = vec![hl("2003-01-02T07:59:00Z", "early")];
        assert!(filter_trading_hours(&before_open, 0).unwrap().is_empty());

        let at_close = vec![hl("2003-01-02T16:30:59Z", "late")];
        assert_eq!(filter_trading_hours(&at_close, 0).unwrap().len(), 1);

        let after_close = vec![hl("2003-01-02T16:31:00Z", "too late")];
        assert!(filter_trading_hours(&after_close, 0).unwrap().is_empty());

        let dropped = vec![hl("2003-01-02T16:25:00Z", "in drop window")];
        assert!(filter_trading_hours(&dropped, 10).unwrap().is_empty());
        assert_eq!(filter_trading_hours(&dropped, 0).unwrap().len(), 1);
    }

    #[test]
    fn filter_matches_minute_enumeration_oracle() {
        // Brute-force oracle: build the inclusion set by walking minutes from
        // 08:00 through 16:30 - drop, then compare every minute of the day.
        for drop in [0u32, 10, 509] {
            let mut included = std::collections::HashSet::new();
            let mut m = 8 * 60;
            while m <= 16 * 60 + 30 - drop {
                included.insert(m);
                m += 1;
            }
            for minute in 0..1440u32 {
                let stamp = format!("2003-01-02T{:02}:{:02}:30Z", minute / 60, minute % 60);
                let headline = vec![hl(&stamp, "probe")];
                let kept = filter_trading_hours(&headline, drop).unwrap().len() == 1;
                assert_eq!(kept, included.contains(&minute), "minute {minute} drop {drop}");
            }
        }
    }

    #[test]
    fn filter_rejects_out_of_range_drop() {
        assert!(matches!(
            filter_trading_hours(&[], 510).unwrap_err(),
            IngestError::InvalidDropMinutes(510)
        ));
    }

    #[test]
    fn dedupe_then_filter_differs_from_filter_then_dedupe() {
        // First release at 07:30 (outside the window), re-release at 10:00.
        // The pipeline order (dedupe first) must drop the headline entirely.
        let input = vec![hl("2003-01-02T07:30:00Z", "X"), hl("2003-01-02T10:00:00Z", "X")];
        let pipeline_order = filter_trading_hours(&dedupe_headlines(&input), 0).unwrap();
        assert!(pipeline_order.is_empty());

        let reversed = dedupe_headlines(&filter_trading_hours(&input, 0).unwrap());
        assert_eq!(reversed.len(), 1);
        assert_ne!(pipeline_order.len(), reversed.len());

        // When every first release lies inside the window the two orders
        // agree.
        let inside = vec![hl("2003-01-02T09:30:00Z", "Y"), hl("2003-01-02T12:00:00Z", "Y")];
        let a = filter_trading_hours(&dedupe_headlines(&inside), 0).unwrap();
        let b = dedupe_headlines(&filter_trading_hours(&inside, 0).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn bucket_by_day_discards_non_calendar_days() {
        let calendar = TradingCalendar::from_days(vec![
            NaiveDate::from_ymd_opt(2003, 1, 2).unwrap(),
            NaiveDate::from_ymd_opt(2003, 1, 3).unwrap(),
        ])
        .unwrap();
        let headlines = vec![
            hl("2003-01-02T09:00:00Z", "A"),
            hl("2003-01-02T10:00:00Z", "B"),
            hl("2003-01-04T10:00:00Z", "saturday"),
        ];
        let buckets = bucket_headlines_by_day(&headlines, &calendar);
        assert_eq!(buckets.discarded, 1);
        assert_eq!(buckets.buckets[&NaiveDate::from_ymd_opt(2003, 1, 2).unwrap()].len(), 2);
        assert_eq!(buckets.total_bucketed() + buckets.discarded, headlines.len());
    }

    #[test]
    fn bucket_empty_input() {
        let calendar =
            TradingCalendar::from_days(vec![NaiveDate::from_ymd_opt(2003, 1, 2).unwrap()]).unwrap();
        let buckets = bucket_headlines_by_day(&[], &calendar);
        assert!(buckets.buckets.is_empty());
        assert_eq!(buckets.discarded, 0);
    }

    #[test]
    fn calendar_rejects_non_increasing_days() {
        let days = vec![
            NaiveDate::from_ymd_opt(2003, 1, 3).unwrap(),
            NaiveDate::from_ymd_opt(2003, 1, 2).unwrap(),
        ];
        assert!(matches!(
            TradingCalendar::from_days(days).unwrap_err(),
            IngestError::NonIncreasingCalendar(_)
        ));
        assert!(matches!(
            TradingCalendar::from_days(vec![]).unwrap_err(),
            IngestError::EmptyCalendar
        ));
    }
}
