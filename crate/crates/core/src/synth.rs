//! Seeded synthetic-market generator with known ground truth.
//!
//! Two levels of generator live here. [`generate_factor_triple`] produces a
//! bare (y, x1, x2) triple following `y = a1 x1 + a2 x2 + b e` with the
//! regressor sample moments pinned exactly (zero mean, unit variance,
//! cross-correlation exactly `rho12`), so noiseless configurations are
//! recovered by the fit to machine precision while the idiosyncratic term
//! stays genuinely random and inference remains non-trivial.
//! [`generate_market_files`] emits full transaction/price/headline/lexicon
//! files in the ingest formats, with investor activity and buy/sell
//! direction driven by latent daily factors so the whole pipeline recovers
//! the configured effect directions.

use std::fmt::Write as _;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::InvestorCategory;
use crate::stats::{standardize, AlignedTriple, StatsError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible factor model: implied beta_sq = {0} is negative")]
    InfeasibleConfig(f64),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Ground-truth two-factor linear model for oracle triples.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FactorModel {
    pub len: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub rho12: f64,
    pub seed: u64,
}

impl FactorModel {
    /// Residual variance implied by unit-variance y:
    /// `1 - a1^2 - a2^2 - 2 a1 a2 rho12`.
    pub fn implied_beta_sq(&self) -> f64 {
        1.0 - self.alpha1 * self.alpha1
            - self.alpha2 * self.alpha2
            - 2.0 * self.alpha1 * self.alpha2 * self.rho12
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.len < 3 {
            return Err(SynthError::InvalidConfig(format!("len {} < 3", self.len)));
        }
        if !self.rho12.is_finite() || self.rho12.abs() >= 1.0 - 1e-6 {
            return Err(SynthError::InvalidConfig(format!("rho12 {} too close to 1", self.rho12)));
        }
        if !self.alpha1.is_finite() || !self.alpha2.is_finite() {
            return Err(SynthError::InvalidConfig("non-finite alpha".into()));
        }
        let beta_sq = self.implied_beta_sq();
        if beta_sq < -1e-12 {
            return Err(SynthError::InfeasibleConfig(beta_sq));
        }
        Ok(())
    }
}

fn draw_normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Generate a triple with known coefficients.
///
/// The regressors are Gaussian draws orthonormalized so their sample mean,
/// variance, and mutual correlation equal the configured values exactly;
/// the noise term is left as raw i.i.d. Gaussian draws.
pub fn generate_factor_triple(model: &FactorModel) -> Result<AlignedTriple, SynthError> {
    model.validate()?;
    let t = model.len;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);

    let x1 = standardize(&draw_normals(&mut rng, t))?;
    let g2 = standardize(&draw_normals(&mut rng, t))?;
    // Remove the x1 component, then rescale: exact zero correlation.
    let proj = x1.iter().zip(&g2).map(|(a, b)| a * b).sum::<f64>() / t as f64;
    let orth: Vec<f64> = g2.iter().zip(&x1).map(|(b, a)| b - proj * a).collect();
    let u2 = standardize(&orth)?;

    let load = (1.0 - model.rho12 * model.rho12).sqrt();
    let x2: Vec<f64> = x1.iter().zip(&u2).map(|(a, b)| model.rho12 * a + load * b).collect();

    let beta = model.implied_beta_sq().max(0.0).sqrt();
    let noise = draw_normals(&mut rng, t);
    let y: Vec<f64> = (0..t)
        .map(|i| model.alpha1 * x1[i] + model.alpha2 * x2[i] + beta * noise[i])
        .collect();
    Ok(AlignedTriple::new(y, x1, x2)?)
}

/// Number of investors per category.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct CategoryCounts {
    pub companies: u32,
    pub financial: u32,
    pub governmental: u32,
    pub non_profit: u32,
    pub households: u32,
    pub foreign: u32,
}

impl Default for CategoryCounts {
    fn default() -> Self {
        CategoryCounts {
            companies: 60,
            financial: 30,
            governmental: 10,
            non_profit: 10,
            households: 850,
            foreign: 40,
        }
    }
}

impl CategoryCounts {
    pub fn get(&self, category: InvestorCategory) -> u32 {
        match category {
            InvestorCategory::Companies => self.companies,
            InvestorCategory::Financial => self.financial,
            InvestorCategory::Governmental => self.governmental,
            InvestorCategory::NonProfit => self.non_profit,
            InvestorCategory::Households => self.households,
            InvestorCategory::Foreign => self.foreign,
        }
    }

    pub fn total(&self) -> u32 {
        InvestorCategory::ALL.iter().map(|c| self.get(*c)).sum()
    }
}

/// Configuration of the full market generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_days: usize,
    pub start_day: NaiveDate,
    pub investors: CategoryCounts,
    pub theta: f64,
    pub seed: u64,
    /// Mean headlines per day before the news-factor modulation.
    pub headline_rate: f64,
    /// Correlation between the news-intensity and volatility factors.
    pub news_vol_rho: f64,
    /// Correlation between the sentiment and return factors.
    pub sent_ret_rho: f64,
    /// Log-odds gains of (news, volatility) on the decision to trade.
    pub activity_coupling: (f64, f64),
    /// Log-odds gains of (sentiment, return) on the decision to buy.
    pub direction_coupling: (f64, f64),
    /// Baseline probability that an investor trades on a given day.
    pub base_activity: f64,
    /// Fraction of active investor-days that round-trip within theta.
    pub buysell_fraction: f64,
    /// Probability of emitting an explicit zero-volume record for an
    /// inactive investor-day.
    pub zero_record_rate: f64,
    /// Fraction of headlines released outside the trading window.
    pub offhours_rate: f64,
    /// Probability that a headline is re-released later the same day.
    pub duplicate_release_rate: f64,
    pub base_price: f64,
    pub ret_sigma: f64,
    pub vol_base: f64,
    pub vol_sigma: f64,
    /// Lognormal gain of the news factor on the headline rate.
    pub news_gain: f64,
    /// Baseline per-word probabilities of drawing a positive/negative word.
    pub good_word_rate: f64,
    pub bad_word_rate: f64,
    /// Log-odds gain of the sentiment factor on the good/bad split.
    pub sentiment_gain: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_days: 1510,
            start_day: NaiveDate::from_ymd_opt(2003, 1, 2).unwrap(),
            investors: CategoryCounts::default(),
            theta: 0.01,
            seed: 42,
            headline_rate: 4.0,
            news_vol_rho: 0.501,
            sent_ret_rho: 0.3,
            activity_coupling: (0.3, 0.8),
            direction_coupling: (0.5, -1.1),
            base_activity: 0.18,
            buysell_fraction: 0.15,
            zero_record_rate: 0.002,
            offhours_rate: 0.03,
            duplicate_release_rate: 0.08,
            base_price: 15.0,
            ret_sigma: 0.02,
            vol_base: 0.025,
            vol_sigma: 0.5,
            news_gain: 0.5,
            good_word_rate: 0.18,
            bad_word_rate: 0.17,
            sentiment_gain: 1.2,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        if self.n_days == 0 {
            return Err(SynthError::InvalidConfig("n_days must be positive".into()));
        }
        if !(0.0 < self.theta && self.theta < 1.0) {
            return Err(SynthError::InvalidConfig(format!("theta {} outside (0,1)", self.theta)));
        }
        for (name, rho) in [("news_vol_rho", self.news_vol_rho), ("sent_ret_rho", self.sent_ret_rho)] {
            if rho.abs() >= 1.0 {
                return Err(SynthError::InvalidConfig(format!("{name} {rho} outside (-1,1)")));
            }
        }
        if self.headline_rate < 0.0 {
            return Err(SynthError::InvalidConfig("headline_rate must be non-negative".into()));
        }
        if self.good_word_rate < 0.0
            || self.bad_word_rate < 0.0
            || self.good_word_rate + self.bad_word_rate >= 1.0
        {
            return Err(SynthError::InvalidConfig("word rates must be non-negative and sum below 1".into()));
        }
        if !(0.0..1.0).contains(&self.base_activity) {
            return Err(SynthError::InvalidConfig("base_activity must lie in [0,1)".into()));
        }
        Ok(())
    }
}

/// Generated file contents, byte-deterministic per seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticMarket {
    pub transactions_csv: String,
    pub prices_csv: String,
    pub headlines_jsonl: String,
    pub lexicon_csv: String,
}

impl SyntheticMarket {
    /// Write the four files into a directory (created if needed).
    pub fn write_to_dir(&self, dir: &Path) -> Result<(), SynthError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("transactions.csv"), &self.transactions_csv)?;
        std::fs::write(dir.join("prices.csv"), &self.prices_csv)?;
        std::fs::write(dir.join("headlines.jsonl"), &self.headlines_jsonl)?;
        std::fs::write(dir.join("lexicon.csv"), &self.lexicon_csv)?;
        Ok(())
    }
}

const GOOD_WORDS: [&str; 10] =
    ["gain", "growth", "profit", "beat", "strong", "upgrade", "record", "rally", "surge", "win"];
const BAD_WORDS: [&str; 10] =
    ["loss", "drop", "weak", "cut", "miss", "downgrade", "decline", "lawsuit", "recall", "slump"];
const FILLER_WORDS: [&str; 20] = [
    "shares", "market", "update", "quarter", "report", "guidance", "outlook", "trading", "volume",
    "analysts", "forecast", "results", "chief", "executive", "board", "dividend", "handset",
    "network", "europe", "sales",
];

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn sub_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Weekday-only calendar of `n` days starting at `start`.
pub fn trading_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut days = Vec::with_capacity(n);
    let mut day = start;
    while days.len() < n {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            days.push(day);
        }
        day = day.succ_opt().expect("date overflow");
    }
    days
}

/// Unique alphabetic tag for headline `n` ("wireaaa", "wireaab", ...).
fn headline_tag(mut n: usize) -> String {
    let mut letters = ['a'; 5];
    for slot in letters.iter_mut().rev() {
        *slot = (b'a' + (n % 26) as u8) as char;
        n /= 26;
    }
    format!("wire{}", letters.iter().collect::<String>())
}

struct DayFactors {
    vol: f64,
    news: f64,
    ret: f64,
    sent: f64,
}

fn id_prefix(category: InvestorCategory) -> char {
    match category {
        InvestorCategory::Companies => 'C',
        InvestorCategory::Financial => 'F',
        InvestorCategory::Governmental => 'G',
        InvestorCategory::NonProfit => 'N',
        InvestorCategory::Households => 'H',
        InvestorCategory::Foreign => 'X',
    }
}

/// Generate the full synthetic market: transactions, prices, headlines, and
/// the lexicon the headlines were built from.
pub fn generate_market_files(config: &SynthConfig) -> Result<SyntheticMarket, SynthError> {
    config.validate()?;
    let days = trading_days(config.start_day, config.n_days);

    // Daily latent factors.
    let mut rng_factors = sub_rng(config.seed, 1);
    let load_news = (1.0 - config.news_vol_rho * config.news_vol_rho).sqrt();
    let load_sent = (1.0 - config.sent_ret_rho * config.sent_ret_rho).sqrt();
    let factors: Vec<DayFactors> = (0..config.n_days)
        .map(|_| {
            let vol: f64 = rng_factors.sample(StandardNormal);
            let news_raw: f64 = rng_factors.sample(StandardNormal);
            let ret: f64 = rng_factors.sample(StandardNormal);
            let sent_raw: f64 = rng_factors.sample(StandardNormal);
            DayFactors {
                vol,
                news: config.news_vol_rho * vol + load_news * news_raw,
                ret,
                sent: config.sent_ret_rho * ret + load_sent * sent_raw,
            }
        })
        .collect();

    // Prices: geometric path driven by the return factor; the high-low
    // range encodes the volatility factor exactly.
    let mut prices_csv = String::from("day,close,high,low\n");
    let mut price = config.base_price;
    for (day, f) in days.iter().zip(&factors) {
        price *= (config.ret_sigma * f.ret).exp();
        let vol_level = (config.vol_base
            * (config.vol_sigma * f.vol - 0.5 * config.vol_sigma * config.vol_sigma).exp())
        .min(1.5);
        let high = price * (1.0 + vol_level / 2.0);
        let low = price * (1.0 - vol_level / 2.0);
        writeln!(prices_csv, "{day},{price:.6},{high:.6},{low:.6}").unwrap();
    }

    // Headlines: Poisson arrivals modulated by the news factor, word bags
    // tilted by the sentiment factor, a few off-hours releases, and
    // occasional duplicate releases of the same text later in the day.
    let mut rng_news = sub_rng(config.seed, 2);
    let mut headlines_jsonl = String::new();
    let mut tag_counter = 0usize;
    let polarity_total = config.good_word_rate + config.bad_word_rate;
    let base_split_logit = if config.bad_word_rate > 0.0 && config.good_word_rate > 0.0 {
        (config.good_word_rate / config.bad_word_rate).ln()
    } else {
        0.0
    };
    for (day, f) in days.iter().zip(&factors) {
        let rate = (config.headline_rate
            * (config.news_gain * f.news - 0.5 * config.news_gain * config.news_gain).exp())
        .max(1e-9);
        let count = Poisson::new(rate)
            .map(|p| p.sample(&mut rng_news) as usize)
            .unwrap_or(0)
            .min(200);
        let good_share = sigmoid(base_split_logit + config.sentiment_gain * f.sent);
        for _ in 0..count {
            let minute: u32 = if rng_news.random::<f64>() < config.offhours_rate {
                if rng_news.random::<f64>() < 0.5 {
                    rng_news.random_range(300..480) // 05:00 - 07:59
                } else {
                    rng_news.random_range(991..1200) // 16:31 - 19:59
                }
            } else {
                rng_news.random_range(480..=990) // 08:00 - 16:30
            };
            let second: u32 = rng_news.random_range(0..60);
            let n_words = rng_news.random_range(4..10usize);
            let mut words = Vec::with_capacity(n_words + 1);
            for _ in 0..n_words {
                let u: f64 = rng_news.random();
                let word = if u < polarity_total * good_share {
                    GOOD_WORDS[rng_news.random_range(0..GOOD_WORDS.len())]
                } else if u < polarity_total {
                    BAD_WORDS[rng_news.random_range(0..BAD_WORDS.len())]
                } else {
                    FILLER_WORDS[rng_news.random_range(0..FILLER_WORDS.len())]
                };
                words.push(word.to_string());
            }
            words.push(headline_tag(tag_counter));
            tag_counter += 1;
            let text = words.join(" ");
            let ts = format!("{day}T{:02}:{:02}:{second:02}Z", minute / 60, minute % 60);
            writeln!(headlines_jsonl, "{{\"ts\": \"{ts}\", \"text\": \"{text}\"}}").unwrap();
            if rng_news.random::<f64>() < config.duplicate_release_rate {
                let later = (minute + rng_news.random_range(5..120)).min(1439);
                let ts2 = format!("{day}T{:02}:{:02}:{second:02}Z", later / 60, later % 60);
                writeln!(headlines_jsonl, "{{\"ts\": \"{ts2}\", \"text\": \"{text}\"}}").unwrap();
            }
        }
    }

    // Transactions: activity follows the news/volatility factors, buy-sell
    // direction follows the sentiment/return factors.
    let mut rng_trades = sub_rng(config.seed, 3);
    let mut transactions_csv = String::from("investor_id,category,day,volume_bought,volume_sold\n");
    let base_logit = (config.base_activity / (1.0 - config.base_activity)).ln();
    let (gain_news, gain_vol) = config.activity_coupling;
    let (gain_sent, gain_ret) = config.direction_coupling;
    for (day, f) in days.iter().zip(&factors) {
        let p_active = sigmoid(base_logit + gain_news * f.news + gain_vol * f.vol);
        let p_buy = sigmoid(gain_sent * f.sent + gain_ret * f.ret);
        for category in InvestorCategory::ALL {
            let prefix = id_prefix(category);
            for index in 0..config.investors.get(category) {
                if rng_trades.random::<f64>() >= p_active {
                    if rng_trades.random::<f64>() < config.zero_record_rate {
                        writeln!(transactions_csv, "{prefix}{index:06},{category},{day},0,0")
                            .unwrap();
                    }
                    continue;
                }
                let magnitude: f64 = rng_trades.sample(StandardNormal);
                let volume = (250.0 * magnitude.exp()).round().max(1.0) as u64;
                let (bought, sold) = if rng_trades.random::<f64>() < config.buysell_fraction {
                    // Round-trip within theta of balance.
                    let jitter = rng_trades.random_range(0..=volume / 100);
                    (volume, volume - jitter)
                } else {
                    let residual = if rng_trades.random::<f64>() < 0.15 { volume / 10 } else { 0 };
                    if rng_trades.random::<f64>() < p_buy {
                        (volume, residual)
                    } else {
                        (residual, volume)
                    }
                };
                writeln!(transactions_csv, "{prefix}{index:06},{category},{day},{bought},{sold}")
                    .unwrap();
            }
        }
    }

    let mut lexicon_csv = String::new();
    for word in GOOD_WORDS {
        writeln!(lexicon_csv, "{word},POS").unwrap();
    }
    for word in BAD_WORDS {
        writeln!(lexicon_csv, "{word},NEG").unwrap();
    }

    Ok(SyntheticMarket { transactions_csv, prices_csv, headlines_jsonl, lexicon_csv })
}
