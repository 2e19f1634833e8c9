//! Daily log-returns and the normalized high-low volatility proxy.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{PriceRecord, TradingCalendar};

#[derive(Debug, Error)]
pub enum MarketVarsError {
    #[error("prices must be strictly positive, got {0}")]
    NonPositivePrice(f64),
    #[error("low {low} exceeds high {high}")]
    LowAboveHigh { low: f64, high: f64 },
    #[error("no price record for calendar day {0}")]
    MissingPrice(NaiveDate),
    #[error("price file has {prices} rows but the calendar has {calendar} days")]
    CountMismatch { prices: usize, calendar: usize },
}

/// Per-day return and volatility. The first calendar day has no previous
/// close, so its return is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyMarketVars {
    pub day: NaiveDate,
    pub ret: Option<f64>,
    pub vol: f64,
}

/// Natural-log daily return `ln P(t) - ln P(t-1)`.
pub fn compute_return(close_today: f64, close_prev: f64) -> Result<f64, MarketVarsError> {
    for p in [close_today, close_prev] {
        if !p.is_finite() || p <= 0.0 {
            return Err(MarketVarsError::NonPositivePrice(p));
        }
    }
    Ok(close_today.ln() - close_prev.ln())
}

/// Normalized high-low range `2 (high - low) / (high + low)`.
pub fn compute_volatility(high: f64, low: f64) -> Result<f64, MarketVarsError> {
    for p in [high, low] {
        if !p.is_finite() || p <= 0.0 {
            return Err(MarketVarsError::NonPositivePrice(p));
        }
    }
    if low > high {
        return Err(MarketVarsError::LowAboveHigh { low, high });
    }
    Ok(2.0 * (high - low) / (high + low))
}

/// Compute returns and volatility for every calendar day. Requires exactly
/// one price record per calendar day; missing days are an error, never
/// interpolated.
pub fn build_market_series(
    prices: &[PriceRecord],
    calendar: &TradingCalendar,
) -> Result<BTreeMap<NaiveDate, DailyMarketVars>, MarketVarsError> {
    if prices.len() != calendar.len() {
        return Err(MarketVarsError::CountMismatch {
            prices: prices.len(),
            calendar: calendar.len(),
        });
    }
    let by_day: BTreeMap<NaiveDate, &PriceRecord> = prices.iter().map(|p| (p.day, p)).collect();

    let mut out = BTreeMap::new();
    let mut prev_close: Option<f64> = None;
    for day in calendar.days() {
        let price = by_day.get(day).ok_or(MarketVarsError::MissingPrice(*day))?;
        let ret = match prev_close {
            Some(prev) => Some(compute_return(price.close, prev)?),
            None => None,
        };
        let vol = compute_volatility(price.high, price.low)?;
        out.insert(*day, DailyMarketVars { day: *day, ret, vol });
        prev_close = Some(price.close);
    }
    Ok(out)
}
