//! Reading and writing of the pipeline's intermediate CSV/JSONL files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use newsflow_core::{
    DailyMarketVars, DailyNewsVars, FlowSeries, HeadlineRecord, InvestorCategory, TradingCalendar,
};

/// `file.csv:column` reference on the regress command line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub file: String,
    pub column: String,
}

impl ColumnSpec {
    pub fn parse(spec: &str) -> Result<ColumnSpec> {
        let (file, column) = spec
            .rsplit_once(':')
            .with_context(|| format!("expected FILE:COLUMN, got `{spec}`"))?;
        if file.is_empty() || column.is_empty() {
            bail!("expected FILE:COLUMN, got `{spec}`");
        }
        Ok(ColumnSpec { file: file.to_string(), column: column.to_string() })
    }
}

pub fn write_calendar(path: &Path, calendar: &TradingCalendar) -> Result<()> {
    let mut out = String::from("day\n");
    for day in calendar.days() {
        out.push_str(&format!("{day}\n"));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_calendar(path: &Path) -> Result<TradingCalendar> {
    let content = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut days = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim();
        if i == 0 || line.is_empty() {
            continue; // header
        }
        days.push(
            NaiveDate::parse_from_str(line, "%Y-%m-%d")
                .with_context(|| format!("bad calendar day `{line}`"))?,
        );
    }
    Ok(TradingCalendar::from_days(days)?)
}

/// One bucketed headline row in `buckets.jsonl`.
#[derive(Debug, Serialize, Deserialize)]
pub struct BucketRow {
    pub day: NaiveDate,
    pub ts: String,
    pub text: String,
}

pub fn write_headlines_jsonl(path: &Path, headlines: &[HeadlineRecord]) -> Result<()> {
    let mut out = String::new();
    for h in headlines {
        let row = serde_json::json!({
            "ts": h.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            "text": h.text,
        });
        out.push_str(&row.to_string());
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn write_buckets_jsonl(
    path: &Path,
    buckets: &BTreeMap<NaiveDate, Vec<HeadlineRecord>>,
) -> Result<()> {
    let mut out = String::new();
    for (day, headlines) in buckets {
        for h in headlines {
            let row = serde_json::json!({
                "day": day,
                "ts": h.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                "text": h.text,
            });
            out.push_str(&row.to_string());
            out.push('\n');
        }
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_buckets_jsonl(path: &Path) -> Result<BTreeMap<NaiveDate, Vec<HeadlineRecord>>> {
    let content = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut buckets: BTreeMap<NaiveDate, Vec<HeadlineRecord>> = BTreeMap::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: BucketRow = serde_json::from_str(line)
            .with_context(|| format!("{}:{}: bad bucket row", path.display(), i + 1))?;
        let timestamp = chrono::DateTime::parse_from_rfc3339(&row.ts)
            .with_context(|| format!("{}:{}: bad timestamp", path.display(), i + 1))?
            .with_timezone(&chrono::Utc);
        let record = HeadlineRecord::new(timestamp, &row.text)
            .with_context(|| format!("{}:{}: empty headline", path.display(), i + 1))?;
        buckets.entry(row.day).or_default().push(record);
    }
    Ok(buckets)
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_flows_csv(path: &Path, series: &FlowSeries) -> Result<()> {
    let mut out =
        String::from("day,category,n_buy,n_sell,n_buysell,n_total,imbalance_abs,imbalance_rel\n");
    for flow in series.iter() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            flow.day,
            flow.category,
            flow.n_buy,
            flow.n_sell,
            flow.n_buysell,
            flow.n_total,
            flow.imbalance_abs,
            fmt_opt(flow.imbalance_rel),
        ));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn write_market_csv(path: &Path, series: &BTreeMap<NaiveDate, DailyMarketVars>) -> Result<()> {
    let mut out = String::from("day,ret,vol\n");
    for row in series.values() {
        out.push_str(&format!("{},{},{}\n", row.day, fmt_opt(row.ret), row.vol));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn write_news_csv(path: &Path, series: &BTreeMap<NaiveDate, DailyNewsVars>) -> Result<()> {
    let mut out = String::from("day,h,good,bad,s_abs,s_rel\n");
    for row in series.values() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.day, row.h, row.good, row.bad, row.s_abs, row.s_rel
        ));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// A fully parsed analysis CSV: day column plus named value columns, with
/// empty fields read back as undefined.
#[derive(Debug)]
pub struct DayTable {
    pub columns: Vec<String>,
    /// Per-category day maps when the file carries a `category` column,
    /// keyed by `None` otherwise.
    pub values: BTreeMap<Option<InvestorCategory>, BTreeMap<NaiveDate, Vec<Option<f64>>>>,
}

impl DayTable {
    pub fn column_index(&self, column: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == column)
            .with_context(|| format!("no column `{column}`; available: {:?}", self.columns))
    }

    /// Extract one column as a day map, selecting a category when the file
    /// is category-keyed.
    pub fn day_series(
        &self,
        column: &str,
        category: Option<InvestorCategory>,
    ) -> Result<BTreeMap<NaiveDate, Option<f64>>> {
        let idx = self.column_index(column)?;
        let key = if self.values.contains_key(&None) {
            None
        } else {
            let category =
                category.context("file is category-keyed; pass --category to select one")?;
            Some(category)
        };
        let per_day = self
            .values
            .get(&key)
            .with_context(|| format!("no rows for category {key:?}"))?;
        Ok(per_day.iter().map(|(day, row)| (*day, row[idx])).collect())
    }
}

/// Read any of the pipeline CSVs (flows, market, news) into a day table.
pub fn read_day_table(path: &Path) -> Result<DayTable> {
    let content = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new().from_reader(content.as_bytes());
    let headers = reader.headers()?.clone();
    let day_idx = headers
        .iter()
        .position(|h| h == "day")
        .with_context(|| format!("{} has no `day` column", path.display()))?;
    let category_idx = headers.iter().position(|h| h == "category");
    let columns: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != day_idx && Some(*i) != category_idx)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut values: BTreeMap<Option<InvestorCategory>, BTreeMap<NaiveDate, Vec<Option<f64>>>> =
        BTreeMap::new();
    for (line, row) in reader.records().enumerate() {
        let row = row?;
        let day = NaiveDate::parse_from_str(&row[day_idx], "%Y-%m-%d")
            .with_context(|| format!("{}:{}: bad day", path.display(), line + 2))?;
        let category = match category_idx {
            Some(idx) => Some(
                InvestorCategory::parse_token(&row[idx])
                    .with_context(|| format!("{}:{}: bad category", path.display(), line + 2))?,
            ),
            None => None,
        };
        let mut parsed = Vec::with_capacity(columns.len());
        for (i, field) in row.iter().enumerate() {
            if i == day_idx || Some(i) == category_idx {
                continue;
            }
            if field.is_empty() {
                parsed.push(None);
            } else {
                let v: f64 = field.parse().with_context(|| {
                    format!("{}:{}: bad number `{field}`", path.display(), line + 2)
                })?;
                parsed.push(Some(v));
            }
        }
        values.entry(category).or_default().insert(day, parsed);
    }
    Ok(DayTable { columns, values })
}
