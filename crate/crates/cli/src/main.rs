//! `newsflow`: command-line pipeline from raw market microdata files to
//! regression reports.
//!
//! The stages mirror the library modules: `synth` fabricates a seeded
//! market, `ingest` validates and normalizes the three input files,
//! `classify` / `marketvars` / `sentiment` build the daily analysis
//! series, `regress` fits one response against a regressor pair, and
//! `report` renders summary/histogram/regression tables.

mod csvio;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use newsflow_core::{
    align, bucket_headlines_by_day, build_flow_series, build_market_series, build_news_series,
    dedupe_headlines, filter_trading_hours, format_sig, generate_market_files, intraday_histogram,
    parse_headlines, parse_prices, parse_transactions, regress, regression_table,
    InvestorCategory, PolarityLexicon, RegressOptions, RegressionReport, SummaryTable,
    SynthConfig, TradingCalendar, TransactionSchema, TzOffsetRules,
};

use csvio::ColumnSpec;

#[derive(Parser)]
#[command(name = "newsflow", version, about = "Investor-flow and news-sentiment analysis pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic market (transactions, prices, headlines, lexicon).
    Synth {
        /// JSON config; missing fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse, validate, deduplicate, and bucket the three input files.
    Ingest {
        #[arg(long)]
        transactions: PathBuf,
        #[arg(long)]
        prices: PathBuf,
        #[arg(long)]
        headlines: PathBuf,
        /// Shorten the trading window by this many minutes before 16:30.
        #[arg(long, default_value_t = 0)]
        drop_last_minutes: u32,
        /// Fixed-rule offset file for feeds with local naive timestamps.
        #[arg(long = "assume-local-tz")]
        assume_local_tz: Option<PathBuf>,
        /// Field delimiter of the transaction and price files.
        #[arg(long, default_value_t = ',')]
        delimiter: char,
        #[arg(long = "col-investor-id", default_value = "investor_id")]
        col_investor_id: String,
        #[arg(long = "col-category", default_value = "category")]
        col_category: String,
        #[arg(long = "col-day", default_value = "day")]
        col_day: String,
        #[arg(long = "col-buy", default_value = "volume_bought")]
        col_buy: String,
        #[arg(long = "col-sell", default_value = "volume_sold")]
        col_sell: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify investor-days and aggregate per-category daily flows.
    Classify {
        /// Directory written by `ingest`.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = newsflow_core::DEFAULT_THETA)]
        theta: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute daily returns and the high-low volatility proxy.
    Marketvars {
        #[arg(long)]
        prices: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score bucketed headlines against a polarity lexicon.
    Sentiment {
        /// Directory written by `ingest`.
        #[arg(long)]
        buckets: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one standardized two-regressor model with both CI constructions.
    Regress {
        /// Response as FILE:COLUMN (e.g. flows.csv:imbalance_rel).
        #[arg(long)]
        y: String,
        /// First regressor as FILE:COLUMN.
        #[arg(long)]
        x1: String,
        /// Second regressor as FILE:COLUMN.
        #[arg(long)]
        x2: String,
        /// Investor category for category-keyed files.
        #[arg(long)]
        category: Option<InvestorCategory>,
        #[arg(long, default_value_t = newsflow_core::DEFAULT_BOOTSTRAP_REPLICATES)]
        boot: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = newsflow_core::DEFAULT_CI_LEVEL)]
        level: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render tables from pipeline outputs.
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Summary statistics of the analysis variables.
    Summary {
        #[arg(long)]
        flows: Option<PathBuf>,
        #[arg(long)]
        market: Option<PathBuf>,
        #[arg(long)]
        news: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Intraday arrival-rate histogram from deduplicated headlines.
    Histogram {
        /// JSONL headline file (deduplicated, NOT hours-filtered).
        #[arg(long)]
        headlines: PathBuf,
        #[arg(long, default_value_t = 10)]
        bin_minutes: u32,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Combine `regress` JSON reports into one table.
    Regressions {
        /// One or more report.json files from `regress`.
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Csv,
    Json,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Synth { config, seed, out } => cmd_synth(config, seed, &out),
        Command::Ingest {
            transactions,
            prices,
            headlines,
            drop_last_minutes,
            assume_local_tz,
            delimiter,
            col_investor_id,
            col_category,
            col_day,
            col_buy,
            col_sell,
            out,
        } => {
            let schema = TransactionSchema {
                investor_id: col_investor_id,
                category: col_category,
                day: col_day,
                volume_bought: col_buy,
                volume_sold: col_sell,
            };
            cmd_ingest(
                &transactions,
                &prices,
                &headlines,
                drop_last_minutes,
                assume_local_tz.as_deref(),
                delimiter,
                &schema,
                &out,
            )
        }
        Command::Classify { input, theta, out } => cmd_classify(&input, theta, &out),
        Command::Marketvars { prices, out } => cmd_marketvars(&prices, &out),
        Command::Sentiment { buckets, lexicon, out } => cmd_sentiment(&buckets, &lexicon, &out),
        Command::Regress { y, x1, x2, category, boot, seed, level, out } => {
            cmd_regress(&y, &x1, &x2, category, boot, seed, level, &out)
        }
        Command::Report(report) => match report {
            ReportCommand::Summary { flows, market, news, format, out } => {
                cmd_report_summary(flows.as_deref(), market.as_deref(), news.as_deref(), format, out.as_deref())
            }
            ReportCommand::Histogram { headlines, bin_minutes, format, out } => {
                cmd_report_histogram(&headlines, bin_minutes, format, out.as_deref())
            }
            ReportCommand::Regressions { inputs, format, out } => {
                cmd_report_regressions(&inputs, format, out.as_deref())
            }
        },
    }
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, content).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_synth(config: Option<PathBuf>, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut config: SynthConfig = match config {
        Some(path) => {
            let content =
                fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&content).with_context(|| format!("parsing {}", path.display()))?
        }
        None => SynthConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let market = generate_market_files(&config)?;
    market.write_to_dir(out)?;
    eprintln!(
        "wrote transactions.csv, prices.csv, headlines.jsonl, lexicon.csv to {}",
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct IngestSummary {
    transactions: usize,
    price_days: usize,
    headlines_raw: usize,
    headlines_deduped: usize,
    headlines_in_window: usize,
    headlines_bucketed: usize,
    headlines_discarded_non_trading: usize,
    drop_last_minutes: u32,
}

#[allow(clippy::too_many_arguments)]
fn cmd_ingest(
    transactions: &Path,
    prices: &Path,
    headlines: &Path,
    drop_last_minutes: u32,
    assume_local_tz: Option<&Path>,
    delimiter: char,
    schema: &TransactionSchema,
    out: &Path,
) -> Result<()> {
    if !delimiter.is_ascii() {
        bail!("delimiter must be a single ASCII character");
    }
    let delimiter = delimiter as u8;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let tx_file = fs::File::open(transactions)
        .with_context(|| format!("opening {}", transactions.display()))?;
    let records = parse_transactions(std::io::BufReader::new(tx_file), schema, delimiter)
        .with_context(|| format!("parsing {}", transactions.display()))?;

    let price_file =
        fs::File::open(prices).with_context(|| format!("opening {}", prices.display()))?;
    let price_records = parse_prices(std::io::BufReader::new(price_file), delimiter)
        .with_context(|| format!("parsing {}", prices.display()))?;
    let calendar = TradingCalendar::from_prices(&price_records)?;

    let tz_rules = match assume_local_tz {
        Some(path) => {
            let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            Some(TzOffsetRules::from_reader(std::io::BufReader::new(file))?)
        }
        None => None,
    };
    let headline_file =
        fs::File::open(headlines).with_context(|| format!("opening {}", headlines.display()))?;
    let raw = parse_headlines(std::io::BufReader::new(headline_file), tz_rules.as_ref())
        .with_context(|| format!("parsing {}", headlines.display()))?;

    // Dedup strictly before the hours filter: the first release decides
    // window membership.
    let deduped = dedupe_headlines(&raw);
    let in_window = filter_trading_hours(&deduped, drop_last_minutes)?;
    let buckets = bucket_headlines_by_day(&in_window, &calendar);

    // Normalized intermediate files. Investor ids are opaque strings, so
    // the rewrite goes through a CSV writer for proper quoting.
    let mut tx_writer = csv::Writer::from_writer(Vec::new());
    tx_writer.write_record(["investor_id", "category", "day", "volume_bought", "volume_sold"])?;
    for r in &records {
        tx_writer.write_record([
            r.investor_id.as_str(),
            r.category.as_str(),
            &r.day.to_string(),
            &r.volume_bought.to_string(),
            &r.volume_sold.to_string(),
        ])?;
    }
    fs::write(out.join("transactions.csv"), tx_writer.into_inner()?)?;

    let mut price_out = String::from("day,close,high,low\n");
    for p in &price_records {
        price_out.push_str(&format!("{},{},{},{}\n", p.day, p.close, p.high, p.low));
    }
    fs::write(out.join("prices.csv"), price_out)?;

    csvio::write_calendar(&out.join("calendar.csv"), &calendar)?;
    csvio::write_headlines_jsonl(&out.join("headlines_deduped.jsonl"), &deduped)?;
    csvio::write_buckets_jsonl(&out.join("buckets.jsonl"), &buckets.buckets)?;

    let summary = IngestSummary {
        transactions: records.len(),
        price_days: price_records.len(),
        headlines_raw: raw.len(),
        headlines_deduped: deduped.len(),
        headlines_in_window: in_window.len(),
        headlines_bucketed: buckets.total_bucketed(),
        headlines_discarded_non_trading: buckets.discarded,
        drop_last_minutes,
    };
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    eprintln!(
        "ingested {} transactions, {} price days, {} headlines ({} after dedup, {} in window)",
        summary.transactions,
        summary.price_days,
        summary.headlines_raw,
        summary.headlines_deduped,
        summary.headlines_in_window
    );
    Ok(())
}

fn cmd_classify(input: &Path, theta: f64, out: &Path) -> Result<()> {
    let calendar = csvio::read_calendar(&input.join("calendar.csv"))?;
    let tx_file = fs::File::open(input.join("transactions.csv"))
        .with_context(|| format!("opening transactions.csv under {}", input.display()))?;
    let records = parse_transactions(
        std::io::BufReader::new(tx_file),
        &TransactionSchema::default(),
        b',',
    )?;
    let series = build_flow_series(&records, &calendar, theta)?;
    csvio::write_flows_csv(out, &series)?;
    eprintln!("wrote {} flow rows to {}", series.len(), out.display());
    Ok(())
}

fn cmd_marketvars(prices: &Path, out: &Path) -> Result<()> {
    let file = fs::File::open(prices).with_context(|| format!("opening {}", prices.display()))?;
    let price_records = parse_prices(std::io::BufReader::new(file), b',')?;
    let calendar = TradingCalendar::from_prices(&price_records)?;
    let series = build_market_series(&price_records, &calendar)?;
    csvio::write_market_csv(out, &series)?;
    eprintln!("wrote {} market rows to {}", series.len(), out.display());
    Ok(())
}

fn cmd_sentiment(buckets_dir: &Path, lexicon: &Path, out: &Path) -> Result<()> {
    let calendar = csvio::read_calendar(&buckets_dir.join("calendar.csv"))?;
    let buckets = csvio::read_buckets_jsonl(&buckets_dir.join("buckets.jsonl"))?;
    let lexicon_file =
        fs::File::open(lexicon).with_context(|| format!("opening {}", lexicon.display()))?;
    let lexicon = PolarityLexicon::from_reader(std::io::BufReader::new(lexicon_file))?;
    let series = build_news_series(&buckets, &lexicon, &calendar);
    csvio::write_news_csv(out, &series)?;
    eprintln!("wrote {} news rows to {}", series.len(), out.display());
    Ok(())
}

/// Everything `regress` writes: the fit plus its provenance.
#[derive(Serialize, Deserialize)]
struct RegressOutput {
    y: ColumnSpec,
    x1: ColumnSpec,
    x2: ColumnSpec,
    category: Option<String>,
    ci_level: f64,
    replicates: usize,
    seed: u64,
    common_days: usize,
    dropped_rows: usize,
    #[serde(flatten)]
    report: RegressionReport,
}

#[allow(clippy::too_many_arguments)]
fn cmd_regress(
    y_spec: &str,
    x1_spec: &str,
    x2_spec: &str,
    category: Option<InvestorCategory>,
    boot: usize,
    seed: u64,
    level: f64,
    out: &Path,
) -> Result<()> {
    let y_spec = ColumnSpec::parse(y_spec)?;
    let x1_spec = ColumnSpec::parse(x1_spec)?;
    let x2_spec = ColumnSpec::parse(x2_spec)?;

    let load = |spec: &ColumnSpec| -> Result<BTreeMap<NaiveDate, Option<f64>>> {
        let table = csvio::read_day_table(Path::new(&spec.file))?;
        table
            .day_series(&spec.column, category)
            .with_context(|| format!("extracting {}:{}", spec.file, spec.column))
    };
    let y_map = load(&y_spec)?;
    let x1_map = load(&x1_spec)?;
    let x2_map = load(&x2_spec)?;

    let common_days: Vec<NaiveDate> = y_map
        .keys()
        .filter(|d| x1_map.contains_key(*d) && x2_map.contains_key(*d))
        .copied()
        .collect();
    if common_days.is_empty() {
        bail!("the three inputs share no common days");
    }
    let y: Vec<Option<f64>> = common_days.iter().map(|d| y_map[d]).collect();
    let x1: Vec<Option<f64>> = common_days.iter().map(|d| x1_map[d]).collect();
    let x2: Vec<Option<f64>> = common_days.iter().map(|d| x2_map[d]).collect();

    let (triple, dropped_rows) = align(&y, &x1, &x2)?;
    let options = RegressOptions { ci_level: level, bootstrap_replicates: boot, seed };
    let report = regress(&triple, &options)?;

    let output = RegressOutput {
        y: y_spec,
        x1: x1_spec,
        x2: x2_spec,
        category: category.map(|c| c.to_string()),
        ci_level: level,
        replicates: boot,
        seed,
        common_days: common_days.len(),
        dropped_rows,
        report,
    };
    fs::write(out, serde_json::to_string_pretty(&output)? + "\n")
        .with_context(|| format!("writing {}", out.display()))?;
    eprintln!(
        "fit T={} (dropped {}): alpha1={} alpha2={} beta_sq={}",
        output.report.t,
        dropped_rows,
        format_sig(output.report.alpha1, 6),
        format_sig(output.report.alpha2, 6),
        format_sig(output.report.beta_sq, 6),
    );
    Ok(())
}

fn cmd_report_summary(
    flows: Option<&Path>,
    market: Option<&Path>,
    news: Option<&Path>,
    format: OutputFormat,
    out: Option<&Path>,
) -> Result<()> {
    if flows.is_none() && market.is_none() && news.is_none() {
        bail!("pass at least one of --flows, --market, --news");
    }
    let mut table = SummaryTable::default();
    let mut add_rows = |path: &Path, columns: &[&str], per_category: bool| -> Result<()> {
        let day_table = csvio::read_day_table(path)?;
        for column in columns {
            let idx = day_table.column_index(column)?;
            if per_category {
                for category in InvestorCategory::ALL {
                    if let Some(rows) = day_table.values.get(&Some(category)) {
                        let values: Vec<f64> =
                            rows.values().filter_map(|row| row[idx]).collect();
                        if !values.is_empty() {
                            table.push(column, Some(category.as_str()), &values)?;
                        }
                    }
                }
            } else if let Some(rows) = day_table.values.get(&None) {
                let values: Vec<f64> = rows.values().filter_map(|row| row[idx]).collect();
                if !values.is_empty() {
                    table.push(column, None, &values)?;
                }
            }
        }
        Ok(())
    };
    if let Some(path) = flows {
        add_rows(path, &["n_total", "imbalance_abs", "imbalance_rel"], true)?;
    }
    if let Some(path) = market {
        add_rows(path, &["ret", "vol"], false)?;
    }
    if let Some(path) = news {
        add_rows(path, &["h", "s_abs", "s_rel"], false)?;
    }

    let content = match format {
        OutputFormat::Text => table.render_text(),
        OutputFormat::Csv => table.render_csv(),
        OutputFormat::Json => serde_json::to_string_pretty(&table)? + "\n",
    };
    emit(out, &content)
}

fn cmd_report_histogram(
    headlines: &Path,
    bin_minutes: u32,
    format: OutputFormat,
    out: Option<&Path>,
) -> Result<()> {
    let file =
        fs::File::open(headlines).with_context(|| format!("opening {}", headlines.display()))?;
    let records = parse_headlines(std::io::BufReader::new(file), None)?;
    let hist = intraday_histogram(&records, bin_minutes)?;

    let content = match format {
        OutputFormat::Text => {
            let mut text = format!(
                "{:<8} {:>10} {:>16}   (bins of {} min over {} days)\n",
                "bin", "count", "rate_per_min", hist.bin_minutes, hist.n_days
            );
            for (bin, count) in hist.counts.iter().enumerate() {
                let start = hist.bin_start_minute(bin);
                text.push_str(&format!(
                    "{:02}:{:02}    {:>10} {:>16}\n",
                    start / 60,
                    start % 60,
                    count,
                    format_sig(hist.rates[bin], 6),
                ));
            }
            text
        }
        OutputFormat::Csv => {
            let mut csv = String::from("bin_start_minute,bin_label,count,rate_per_minute\n");
            for (bin, count) in hist.counts.iter().enumerate() {
                let start = hist.bin_start_minute(bin);
                csv.push_str(&format!(
                    "{},{:02}:{:02},{},{}\n",
                    start,
                    start / 60,
                    start % 60,
                    count,
                    hist.rates[bin],
                ));
            }
            csv
        }
        OutputFormat::Json => serde_json::to_string_pretty(&hist)? + "\n",
    };
    emit(out, &content)
}

fn cmd_report_regressions(
    inputs: &[PathBuf],
    format: OutputFormat,
    out: Option<&Path>,
) -> Result<()> {
    let mut rows = Vec::new();
    for path in inputs {
        let content =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let parsed: RegressOutput =
            serde_json::from_str(&content).with_context(|| format!("parsing {}", path.display()))?;
        let label = parsed.category.unwrap_or_else(|| {
            format!("{}:{}", parsed.y.file, parsed.y.column)
        });
        rows.push((label, parsed.report));
    }
    let table = regression_table(rows);

    let content = match format {
        OutputFormat::Text => table.render_text(),
        OutputFormat::Csv => table.render_csv(),
        OutputFormat::Json => serde_json::to_string_pretty(&table)? + "\n",
    };
    emit(out, &content)
}
