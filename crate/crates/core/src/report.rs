//! Table and figure artifacts: summary statistics, the intraday
//! headline-arrival histogram, and formatted regression tables.

use std::collections::BTreeSet;

use chrono::Timelike;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::HeadlineRecord;
use crate::stats::RegressionReport;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot summarize an empty series")]
    EmptySeries,
    #[error("bin width {0} does not divide 1440 minutes")]
    BadBinWidth(u32),
}

/// Location and dispersion statistics of one series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub min: f64,
    pub q05: f64,
    pub q95: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    pub stddev: f64,
    pub n: usize,
}

fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Summary statistics with nearest-rank 5%/95% quantiles, midpoint median,
/// and sample standard deviation.
pub fn summary_stats(values: &[f64]) -> Result<SummaryStats, ReportError> {
    if values.is_empty() {
        return Err(ReportError::EmptySeries);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let stddev = if n > 1 {
        (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(SummaryStats {
        min: sorted[0],
        q05: nearest_rank(&sorted, 0.05),
        q95: nearest_rank(&sorted, 0.95),
        max: sorted[n - 1],
        mean,
        median,
        stddev,
        n,
    })
}

/// One labeled row of the summary table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub variable: String,
    pub category: Option<String>,
    #[serde(flatten)]
    pub stats: SummaryStats,
}

/// Summary table over a set of named series.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn push(&mut self, variable: &str, category: Option<&str>, values: &[f64]) -> Result<(), ReportError> {
        self.rows.push(SummaryRow {
            variable: variable.to_string(),
            category: category.map(str::to_string),
            stats: summary_stats(values)?,
        });
        Ok(())
    }

    pub fn render_text(&self) -> String {
        let mut out = format!(
            "{:<14} {:<14} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
            "variable", "category", "min", "q05", "q95", "max", "mean", "median", "stddev"
        );
        for row in &self.rows {
            out.push_str(&format!(
                "{:<14} {:<14} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
                row.variable,
                row.category.as_deref().unwrap_or("-"),
                format_sig(row.stats.min, 6),
                format_sig(row.stats.q05, 6),
                format_sig(row.stats.q95, 6),
                format_sig(row.stats.max, 6),
                format_sig(row.stats.mean, 6),
                format_sig(row.stats.median, 6),
                format_sig(row.stats.stddev, 6),
            ));
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from("variable,category,min,q05,q95,max,mean,median,stddev,n\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                row.variable,
                row.category.as_deref().unwrap_or(""),
                row.stats.min,
                row.stats.q05,
                row.stats.q95,
                row.stats.max,
                row.stats.mean,
                row.stats.median,
                row.stats.stddev,
                row.stats.n,
            ));
        }
        out
    }
}

/// Average intraday arrival rate of headlines, in headlines per minute per
/// day, over minute-of-day bins.
///
/// `n_days` counts the distinct calendar dates present among the headlines;
/// the conservation identity `sum(counts) = sum(rate * width * n_days)`
/// holds exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntradayHistogram {
    pub bin_minutes: u32,
    pub n_days: usize,
    pub counts: Vec<u64>,
    pub rates: Vec<f64>,
}

impl IntradayHistogram {
    pub fn bin_start_minute(&self, bin: usize) -> u32 {
        bin as u32 * self.bin_minutes
    }
}

/// Histogram of headline release times by minute-of-day bin. Expects the
/// deduplicated but NOT hours-filtered headline list: the figure spans the
/// whole day while the analysis series use the trading window.
pub fn intraday_histogram(
    headlines: &[HeadlineRecord],
    bin_minutes: u32,
) -> Result<IntradayHistogram, ReportError> {
    if bin_minutes == 0 || 1440 % bin_minutes != 0 {
        return Err(ReportError::BadBinWidth(bin_minutes));
    }
    let n_bins = (1440 / bin_minutes) as usize;
    let mut counts = vec![0u64; n_bins];
    let mut days = BTreeSet::new();
    for h in headlines {
        let t = h.timestamp.time();
        let minute = t.hour() * 60 + t.minute();
        counts[(minute / bin_minutes) as usize] += 1;
        days.insert(h.timestamp.date_naive());
    }
    let n_days = days.len();
    let denom = n_days as f64 * bin_minutes as f64;
    let rates = counts
        .iter()
        .map(|c| if n_days == 0 { 0.0 } else { *c as f64 / denom })
        .collect();
    Ok(IntradayHistogram { bin_minutes, n_days, counts, rates })
}

/// One category row of a regression table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionTableRow {
    pub category: String,
    #[serde(flatten)]
    pub report: RegressionReport,
}

/// Regression results across categories, in the column layout of the
/// summary tables: coefficients with both interval constructions, residual
/// variance percentage, and both partial correlations.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RegressionTable {
    pub rows: Vec<RegressionTableRow>,
}

/// Assemble a table from per-category regression reports.
pub fn regression_table(reports: Vec<(String, RegressionReport)>) -> RegressionTable {
    RegressionTable {
        rows: reports
            .into_iter()
            .map(|(category, report)| RegressionTableRow { category, report })
            .collect(),
    }
}

impl RegressionTable {
    pub fn render_text(&self) -> String {
        let mut out = format!(
            "{:<14} {:>10} {:>24} {:>24} {:>10} {:>24} {:>24} {:>10} {:>10} {:>10}\n",
            "category",
            "alpha1",
            "gauss_ci_1",
            "boot_ci_1",
            "alpha2",
            "gauss_ci_2",
            "boot_ci_2",
            "resid_pct",
            "pc1",
            "pc2"
        );
        for row in &self.rows {
            let r = &row.report;
            let interval = |i: &crate::stats::Interval| {
                format!("({},{})", format_sig(i.lo, 6), format_sig(i.hi, 6))
            };
            out.push_str(&format!(
                "{:<14} {:>10} {:>24} {:>24} {:>10} {:>24} {:>24} {:>10} {:>10} {:>10}\n",
                row.category,
                format_sig(r.alpha1, 6),
                interval(&r.ci_gauss_1),
                interval(&r.ci_boot_1),
                format_sig(r.alpha2, 6),
                interval(&r.ci_gauss_2),
                interval(&r.ci_boot_2),
                format_sig(100.0 * r.beta_sq, 6),
                format_sig(r.pc1, 6),
                format_sig(r.pc2, 6),
            ));
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from(
            "category,alpha1,ci_gauss_1_lo,ci_gauss_1_hi,ci_boot_1_lo,ci_boot_1_hi,\
             alpha2,ci_gauss_2_lo,ci_gauss_2_hi,ci_boot_2_lo,ci_boot_2_hi,\
             residual_variance_pct,pc1,pc2,t\n",
        );
        for row in &self.rows {
            let r = &row.report;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                row.category,
                r.alpha1,
                r.ci_gauss_1.lo,
                r.ci_gauss_1.hi,
                r.ci_boot_1.lo,
                r.ci_boot_1.hi,
                r.alpha2,
                r.ci_gauss_2.lo,
                r.ci_gauss_2.hi,
                r.ci_boot_2.lo,
                r.ci_boot_2.hi,
                100.0 * r.beta_sq,
                r.pc1,
                r.pc2,
                r.t,
            ));
        }
        out
    }
}

/// Format with `digits` significant digits in plain decimal notation.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}
