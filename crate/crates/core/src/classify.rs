//! Per-investor trading-state classification and per-category daily flows.
//!
//! An investor-day is labeled from the buy/sell volume ratio
//! `q = (V_b - V_s) / (V_b + V_s)`: Buy when `q > theta`, Sell when
//! `q < -theta`, BuySell otherwise, and Inactive when both volumes are zero.
//! For integer volumes the comparison against `theta` is carried out in
//! exact integer arithmetic, so the `q = theta` boundary is decided without
//! floating-point ambiguity.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{InvestorCategory, TradingCalendar, TransactionRecord};

/// Classification threshold used throughout unless overridden.
pub const DEFAULT_THETA: f64 = 0.01;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("volumes must be non-negative and finite, got bought={bought} sold={sold}")]
    NegativeVolume { bought: f64, sold: f64 },
    #[error("theta must lie strictly inside (0, 1), got {0}")]
    InvalidTheta(f64),
    #[error("record for investor {investor_id} dated {day} lies outside the trading calendar")]
    DayOutsideCalendar { investor_id: String, day: NaiveDate },
}

/// Daily trading state of one investor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TradingState {
    Buy,
    Sell,
    BuySell,
    Inactive,
}

/// Classify one investor-day from its bought and sold volumes.
pub fn classify_state(
    volume_bought: f64,
    volume_sold: f64,
    theta: f64,
) -> Result<TradingState, ClassifyError> {
    if !volume_bought.is_finite() || !volume_sold.is_finite() || volume_bought < 0.0 || volume_sold < 0.0
    {
        return Err(ClassifyError::NegativeVolume { bought: volume_bought, sold: volume_sold });
    }
    if !theta.is_finite() || theta <= 0.0 || theta >= 1.0 {
        return Err(ClassifyError::InvalidTheta(theta));
    }
    if volume_bought == 0.0 && volume_sold == 0.0 {
        return Ok(TradingState::Inactive);
    }
    if let Some(state) = classify_exact(volume_bought, volume_sold, theta) {
        return Ok(state);
    }
    let q = (volume_bought - volume_sold) / (volume_bought + volume_sold);
    Ok(if q > theta {
        TradingState::Buy
    } else if q < -theta {
        TradingState::Sell
    } else {
        TradingState::BuySell
    })
}

/// Exact comparison of `q = (b - s)/(b + s)` against `theta` for integer
/// volumes. `theta` is a dyadic rational `m * 2^exp` (every finite f64 is),
/// so `q > theta` becomes the integer comparison
/// `(b - s) << -exp  >  m * (b + s)`. Returns `None` when the volumes are
/// not integers or the shifted products would leave i128 range.
fn classify_exact(volume_bought: f64, volume_sold: f64, theta: f64) -> Option<TradingState> {
    const MAX_EXACT_VOLUME: f64 = 9.007199254740992e15; // 2^53
    if volume_bought.fract() != 0.0
        || volume_sold.fract() != 0.0
        || volume_bought > MAX_EXACT_VOLUME
        || volume_sold > MAX_EXACT_VOLUME
    {
        return None;
    }
    let (mantissa, exp) = decompose_f64(theta);
    // theta in (0, 1) always has a negative exponent; bail out when the
    // required shift cannot fit alongside the volume difference.
    let shift = -exp;
    let bought = volume_bought as i128;
    let sold = volume_sold as i128;
    let diff = bought - sold;
    let total = bought + sold;
    if !(0..=70).contains(&shift) || diff.unsigned_abs() >= (1u128 << (126 - shift as u32)) {
        return None;
    }
    let lhs = diff << shift;
    let rhs = mantissa * total; // < 2^53 * 2^54, safely inside i128
    Some(if lhs > rhs {
        TradingState::Buy
    } else if lhs < -rhs {
        TradingState::Sell
    } else {
        TradingState::BuySell
    })
}

/// Split a finite positive f64 into `(mantissa, exponent)` with
/// `value = mantissa * 2^exponent` exactly.
fn decompose_f64(value: f64) -> (i128, i32) {
    let bits = value.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i128;
    if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1i128 << 52), exp_bits - 1075)
    }
}

/// Per-category, per-day counts of investors in each trading state, with
/// the derived imbalance variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyCategoryFlow {
    pub day: NaiveDate,
    pub category: InvestorCategory,
    pub n_buy: u32,
    pub n_sell: u32,
    pub n_buysell: u32,
    pub n_total: u32,
    pub imbalance_abs: i64,
    /// `(n_buy - n_sell) / n_total`; `None` on days with no active investors
    /// rather than a fabricated balanced reading.
    pub imbalance_rel: Option<f64>,
}

impl DailyCategoryFlow {
    pub fn from_counts(
        day: NaiveDate,
        category: InvestorCategory,
        n_buy: u32,
        n_sell: u32,
        n_buysell: u32,
    ) -> DailyCategoryFlow {
        let n_total = n_buy + n_sell + n_buysell;
        let imbalance_abs = i64::from(n_buy) - i64::from(n_sell);
        let imbalance_rel =
            (n_total > 0).then(|| imbalance_abs as f64 / n_total as f64);
        DailyCategoryFlow { day, category, n_buy, n_sell, n_buysell, n_total, imbalance_abs, imbalance_rel }
    }

    pub fn zero(day: NaiveDate, category: InvestorCategory) -> DailyCategoryFlow {
        DailyCategoryFlow::from_counts(day, category, 0, 0, 0)
    }
}

/// Aggregate one day's records into per-category flows.
///
/// Inactive investors contribute to no count. Output carries one row per
/// category present in the records (even when all of its investors were
/// inactive), ordered by category.
pub fn aggregate_daily(
    records: &[TransactionRecord],
    theta: f64,
) -> Result<Vec<DailyCategoryFlow>, ClassifyError> {
    let Some(first) = records.first() else { return Ok(Vec::new()) };
    let day = first.day;
    debug_assert!(records.iter().all(|r| r.day == day), "records must share one day");

    let mut counts: BTreeMap<InvestorCategory, (u32, u32, u32)> = BTreeMap::new();
    for record in records {
        let entry = counts.entry(record.category).or_default();
        match classify_state(record.volume_bought, record.volume_sold, theta)? {
            TradingState::Buy => entry.0 += 1,
            TradingState::Sell => entry.1 += 1,
            TradingState::BuySell => entry.2 += 1,
            TradingState::Inactive => {}
        }
    }
    Ok(counts
        .into_iter()
        .map(|(category, (b, s, bs))| DailyCategoryFlow::from_counts(day, category, b, s, bs))
        .collect())
}

/// Dense per-day, per-category flow series over a trading calendar.
#[derive(Debug, Clone)]
pub struct FlowSeries {
    days: Vec<NaiveDate>,
    rows: BTreeMap<(NaiveDate, InvestorCategory), DailyCategoryFlow>,
}

impl FlowSeries {
    pub fn get(&self, category: InvestorCategory, day: NaiveDate) -> Option<&DailyCategoryFlow> {
        self.rows.get(&(day, category))
    }

    pub fn days(&self) -> &[NaiveDate] {
        &self.days
    }

    /// Rows in (day, category) order.
    pub fn iter(&self) -> impl Iterator<Item = &DailyCategoryFlow> {
        self.rows.values()
    }

    /// Extract one per-day value for a category, in calendar order.
    pub fn values<F>(&self, category: InvestorCategory, extract: F) -> Vec<Option<f64>>
    where
        F: Fn(&DailyCategoryFlow) -> Option<f64>,
    {
        self.days
            .iter()
            .map(|day| self.rows.get(&(*day, category)).and_then(&extract))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Classify every record and build the dense flow series: every calendar
/// day carries a row for each of the six categories, zero-count when no
/// investor of the category was active.
pub fn build_flow_series(
    records: &[TransactionRecord],
    calendar: &TradingCalendar,
    theta: f64,
) -> Result<FlowSeries, ClassifyError> {
    let mut by_day: BTreeMap<NaiveDate, Vec<&TransactionRecord>> = BTreeMap::new();
    for record in records {
        if !calendar.contains(record.day) {
            return Err(ClassifyError::DayOutsideCalendar {
                investor_id: record.investor_id.clone(),
                day: record.day,
            });
        }
        by_day.entry(record.day).or_default().push(record);
    }

    let mut rows = BTreeMap::new();
    for day in calendar.days() {
        for category in InvestorCategory::ALL {
            rows.insert((*day, category), DailyCategoryFlow::zero(*day, category));
        }
        if let Some(day_records) = by_day.get(day) {
            let owned: Vec<TransactionRecord> = day_records.iter().map(|r| (*r).clone()).collect();
            for flow in aggregate_daily(&owned, theta)? {
                rows.insert((*day, flow.category), flow);
            }
        }
    }
    Ok(FlowSeries { days: calendar.days().to_vec(), rows })
}
