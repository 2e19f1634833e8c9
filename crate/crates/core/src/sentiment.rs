//! Lexicon-based sentiment scoring of daily headline buckets.
//!
//! Tokens are maximal runs of alphabetic characters, uppercased, with no
//! stemming. Polarity words are counted with multiplicity; the relative
//! indicator is forced to zero on days with fewer than five polarity words
//! to avoid spurious discretization effects.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{HeadlineRecord, TradingCalendar};

/// Minimum number of polarity words needed before the relative sentiment
/// indicator is computed instead of being set to zero.
pub const MIN_POLARITY_WORDS: u32 = 5;

#[derive(Debug, Error)]
pub enum SentimentError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("lexicon line {line}: {message}")]
    BadLexiconLine { line: u64, message: String },
    #[error("word `{0}` appears in both the positive and negative sets")]
    ConflictingPolarity(String),
}

/// Positive and negative word sets, uppercase-normalized.
#[derive(Debug, Clone, Default)]
pub struct PolarityLexicon {
    positive: BTreeSet<String>,
    negative: BTreeSet<String>,
}

impl PolarityLexicon {
    pub fn new<I, J>(positive: I, negative: J) -> Result<PolarityLexicon, SentimentError>
    where
        I: IntoIterator<Item = String>,
        J: IntoIterator<Item = String>,
    {
        let positive: BTreeSet<String> = positive.into_iter().map(|w| w.to_uppercase()).collect();
        let negative: BTreeSet<String> = negative.into_iter().map(|w| w.to_uppercase()).collect();
        if let Some(shared) = positive.intersection(&negative).next() {
            return Err(SentimentError::ConflictingPolarity(shared.clone()));
        }
        Ok(PolarityLexicon { positive, negative })
    }

    /// Load from a two-column text file: `WORD,POS` or `WORD,NEG` per line.
    /// Blank lines and `#` comments are skipped.
    pub fn from_reader<R: Read>(reader: R) -> Result<PolarityLexicon, SentimentError> {
        let mut content = String::new();
        let mut reader = reader;
        reader.read_to_string(&mut content)?;
        let mut positive = Vec::new();
        let mut negative = Vec::new();
        for (i, raw) in content.lines().enumerate() {
            let line_no = i as u64 + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, polarity) = line.split_once(',').ok_or_else(|| {
                SentimentError::BadLexiconLine {
                    line: line_no,
                    message: "expected `WORD,POS` or `WORD,NEG`".into(),
                }
            })?;
            let word = word.trim();
            if word.is_empty() {
                return Err(SentimentError::BadLexiconLine {
                    line: line_no,
                    message: "empty word".into(),
                });
            }
            match polarity.trim().to_uppercase().as_str() {
                "POS" => positive.push(word.to_string()),
                "NEG" => negative.push(word.to_string()),
                other => {
                    return Err(SentimentError::BadLexiconLine {
                        line: line_no,
                        message: format!("unknown polarity `{other}`"),
                    })
                }
            }
        }
        PolarityLexicon::new(positive, negative)
    }

    pub fn is_positive(&self, token: &str) -> bool {
        self.positive.contains(token)
    }

    pub fn is_negative(&self, token: &str) -> bool {
        self.negative.contains(token)
    }

    /// Lexicon with the positive and negative sets exchanged.
    pub fn swapped(&self) -> PolarityLexicon {
        PolarityLexicon { positive: self.negative.clone(), negative: self.positive.clone() }
    }

    pub fn len(&self) -> usize {
        self.positive.len() + self.negative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty() && self.negative.is_empty()
    }
}

/// Daily news variables: headline count, polarity word counts, and the
/// absolute / relative sentiment indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyNewsVars {
    pub day: NaiveDate,
    pub h: u32,
    pub good: u32,
    pub bad: u32,
    pub s_abs: i64,
    pub s_rel: f64,
}

impl DailyNewsVars {
    pub fn from_counts(day: NaiveDate, h: u32, good: u32, bad: u32) -> DailyNewsVars {
        let s_abs = i64::from(good) - i64::from(bad);
        let total = good + bad;
        let s_rel = if total >= MIN_POLARITY_WORDS { s_abs as f64 / total as f64 } else { 0.0 };
        DailyNewsVars { day, h, good, bad, s_abs, s_rel }
    }
}

/// Split on maximal runs of non-alphabetic characters and uppercase.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_uppercase())
        .collect()
}

/// Score one day's headlines against the lexicon.
pub fn score_day(
    day: NaiveDate,
    headlines: &[HeadlineRecord],
    lexicon: &PolarityLexicon,
) -> DailyNewsVars {
    let mut good = 0u32;
    let mut bad = 0u32;
    for headline in headlines {
        for token in tokenize(&headline.text) {
            if lexicon.is_positive(&token) {
                good += 1;
            } else if lexicon.is_negative(&token) {
                bad += 1;
            }
        }
    }
    DailyNewsVars::from_counts(day, headlines.len() as u32, good, bad)
}

/// Score every calendar day; days without headlines yield all-zero rows.
pub fn build_news_series(
    buckets: &BTreeMap<NaiveDate, Vec<HeadlineRecord>>,
    lexicon: &PolarityLexicon,
    calendar: &TradingCalendar,
) -> BTreeMap<NaiveDate, DailyNewsVars> {
    calendar
        .days()
        .iter()
        .map(|day| {
            let vars = match buckets.get(day) {
                Some(headlines) => score_day(*day, headlines, lexicon),
                None => DailyNewsVars::from_counts(*day, 0, 0, 0),
            };
            (*day, vars)
        })
        .collect()
}
