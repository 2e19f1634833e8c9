//! Investor-flow analytics over market microdata: per-investor trading-state
//! classification, category-level flow aggregation, lexicon-based news
//! sentiment indicators, and a two-regressor OLS / partial-correlation
//! engine with Gaussian and bootstrap inference, validated end to end
//! against a seeded synthetic-market generator.
//!
//! The pipeline runs in stages, each with its own module:
//!
//! 1. [`ingest`] parses transaction, price, and headline files, normalizes
//!    headline timestamps, deduplicates repeated releases, filters to the
//!    08:00-16:30 UTC trading window, and aligns everything on the trading
//!    calendar from the price file.
//! 2. [`classify`] converts investor-day volumes into Buy/Sell/BuySell
//!    states and aggregates them into per-category daily flow variables.
//! 3. [`marketvars`] computes daily log-returns and the normalized
//!    high-low volatility proxy.
//! 4. [`sentiment`] scores daily headline buckets against a pluggable
//!    polarity lexicon.
//! 5. [`stats`] fits standardized two-regressor models in closed form,
//!    with partial correlations, the regression/partial-correlation
//!    duality, Gaussian and pairs-bootstrap intervals, autocorrelation
//!    bands, and permutation nulls.
//! 6. [`synth`] generates seeded synthetic markets (and bare factor
//!    triples) with known ground truth for validation.
//! 7. [`report`] renders summary, histogram, and regression tables as
//!    text, CSV, and JSON.

pub mod classify;
pub mod ingest;
pub mod marketvars;
pub mod report;
pub mod sentiment;
pub mod stats;
pub mod synth;

pub use classify::{
    aggregate_daily, build_flow_series, classify_state, ClassifyError, DailyCategoryFlow,
    FlowSeries, TradingState, DEFAULT_THETA,
};
pub use ingest::{
    bucket_headlines_by_day, dedupe_headlines, filter_trading_hours, parse_headlines,
    parse_prices, parse_transactions, DayBuckets, HeadlineRecord, IngestError, InvestorCategory,
    PriceRecord, TradingCalendar, TransactionRecord, TransactionSchema, TzOffsetRules,
};
pub use marketvars::{
    build_market_series, compute_return, compute_volatility, DailyMarketVars, MarketVarsError,
};
pub use report::{
    format_sig, intraday_histogram, regression_table, summary_stats, IntradayHistogram,
    RegressionTable, ReportError, SummaryStats, SummaryTable,
};
pub use sentiment::{
    build_news_series, score_day, tokenize, DailyNewsVars, PolarityLexicon, SentimentError,
};
pub use stats::{
    align, autocorrelation, bootstrap_ci, duality_check, gaussian_ci, ols2_closed_form,
    partial_correlations, pearson, permutation_null, regress, standardize, AcfPoint,
    AlignedTriple, Interval, OlsFit, PermutationNull, RegressOptions, RegressionReport,
    StatsError, DEFAULT_BOOTSTRAP_REPLICATES, DEFAULT_CI_LEVEL,
};
pub use synth::{
    generate_factor_triple, generate_market_files, trading_days, CategoryCounts, FactorModel,
    SynthConfig, SynthError, SyntheticMarket,
};
