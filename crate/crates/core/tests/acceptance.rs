//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured numbers. Every tolerance is pinned in the assertions.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use newsflow_core::stats::triple_correlations;
use newsflow_core::{
    align, bootstrap_ci, bucket_headlines_by_day, build_flow_series, build_market_series,
    build_news_series, classify_state, dedupe_headlines, duality_check, filter_trading_hours,
    gaussian_ci, generate_factor_triple, generate_market_files, ols2_closed_form,
    parse_headlines, parse_prices, parse_transactions, partial_correlations, permutation_null,
    AlignedTriple, FactorModel, Interval, InvestorCategory, OlsFit, PolarityLexicon, PriceRecord,
    RegressionReport, SynthConfig, TradingCalendar, TradingState, TransactionSchema,
};

fn assemble_report(fit: &OlsFit, c: &newsflow_core::stats::TripleCorrelations, pc: (f64, f64), t: usize) -> RegressionReport {
    let empty = Interval { lo: 0.0, hi: 0.0 };
    RegressionReport {
        alpha1: fit.alpha1,
        alpha2: fit.alpha2,
        beta_sq: fit.beta_sq,
        rho12: c.rho12,
        rho1y: c.rho1y,
        rho2y: c.rho2y,
        pc1: pc.0,
        pc2: pc.1,
        ci_gauss_1: empty,
        ci_gauss_2: empty,
        ci_boot_1: empty,
        ci_boot_2: empty,
        t,
    }
}

/// Criterion 1: on 100 random non-degenerate triples (T=500) the closed
/// form matches a numerical least-squares oracle to 1e-8, the residual
/// variance decomposition matches the correlation-determinant formula to
/// 1e-10, the duality identity holds to 1e-10, and the partial
/// correlations match the residual-regression oracle to 1e-10.
#[test]
fn criterion_1_closed_form_identity_suite() {
    let started = Instant::now();
    let mut meta = ChaCha8Rng::seed_from_u64(0xA11CE);
    let mut worst_alpha = 0.0f64;
    let mut worst_beta = 0.0f64;
    let mut worst_duality = 0.0f64;
    let mut worst_pc = 0.0f64;
    for case in 0..100u64 {
        // Draw a non-degenerate configuration: coefficients away from zero
        // and comfortable residual variance.
        let (alpha1, alpha2, rho12) = loop {
            let a1: f64 = meta.random_range(0.05..0.7) * if meta.random::<bool>() { 1.0 } else { -1.0 };
            let a2: f64 = meta.random_range(0.05..0.7) * if meta.random::<bool>() { 1.0 } else { -1.0 };
            let r: f64 = meta.random_range(-0.8..0.8);
            if 1.0 - a1 * a1 - a2 * a2 - 2.0 * a1 * a2 * r >= 0.05 {
                break (a1, a2, r);
            }
        };
        let model = FactorModel { len: 500, alpha1, alpha2, rho12, seed: 7_000 + case };
        let triple = generate_factor_triple(&model).unwrap().standardized().unwrap();

        // (a) closed form against the iterative minimizer.
        let fit = ols2_closed_form(&triple).unwrap();
        let (oracle1, oracle2) =
            common::least_squares_minimizer(triple.y(), triple.x1(), triple.x2());
        worst_alpha = worst_alpha.max((fit.alpha1 - oracle1).abs()).max((fit.alpha2 - oracle2).abs());
        assert!((fit.alpha1 - oracle1).abs() < 1e-8, "case {case}: alpha1 {} vs oracle {}", fit.alpha1, oracle1);
        assert!((fit.alpha2 - oracle2).abs() < 1e-8, "case {case}: alpha2 {} vs oracle {}", fit.alpha2, oracle2);

        // (b) variance decomposition against the determinant formula.
        let c = triple_correlations(&triple);
        let gamma = 1.0 - c.rho12 * c.rho12 - c.rho1y * c.rho1y - c.rho2y * c.rho2y
            + 2.0 * c.rho12 * c.rho1y * c.rho2y;
        let beta_det = gamma / (1.0 - c.rho12 * c.rho12);
        let beta_decomp =
            1.0 - fit.alpha1 * fit.alpha1 - fit.alpha2 * fit.alpha2 - 2.0 * fit.alpha1 * fit.alpha2 * c.rho12;
        worst_beta = worst_beta.max((beta_det - beta_decomp).abs());
        assert!((beta_det - beta_decomp).abs() < 1e-10, "case {case}");
        assert!((fit.beta_sq - beta_det).abs() < 1e-10, "case {case}");

        // (c) duality identity.
        let pc = partial_correlations(&triple).unwrap();
        let report = assemble_report(&fit, &c, pc, triple.len());
        let discrepancy = duality_check(&report).unwrap();
        worst_duality = worst_duality.max(discrepancy);
        assert!(discrepancy < 1e-10, "case {case}: duality discrepancy {discrepancy:e}");

        // (d) partial correlations against the residual-regression oracle.
        let (oracle_pc1, oracle_pc2) =
            common::residual_partial_correlations(triple.y(), triple.x1(), triple.x2());
        worst_pc = worst_pc.max((pc.0 - oracle_pc1).abs()).max((pc.1 - oracle_pc2).abs());
        assert!((pc.0 - oracle_pc1).abs() < 1e-10, "case {case}");
        assert!((pc.1 - oracle_pc2).abs() < 1e-10, "case {case}");
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!(
        "ACCEPTANCE 1 (closed-form identity suite): PASS: worst |closed-form - oracle| = {worst_alpha:.2e}, \
         worst beta_sq mismatch = {worst_beta:.2e}, worst duality = {worst_duality:.2e}, \
         worst partial-corr mismatch = {worst_pc:.2e}, elapsed {elapsed:?}"
    );
}

/// Criterion 2: with uncorrelated regressors the closed form reduces to
/// alpha1 = rho1y, alpha2 = rho2y, beta_sq = 1 - rho1y^2 - rho2y^2.
#[test]
fn criterion_2_uncorrelated_regressor_special_case() {
    for seed in 0..5 {
        let model = FactorModel { len: 2000, alpha1: 0.3, alpha2: 0.4, rho12: 0.0, seed };
        let triple = generate_factor_triple(&model).unwrap().standardized().unwrap();
        let c = triple_correlations(&triple);
        assert!(c.rho12.abs() < 1e-12, "sample rho12 {}", c.rho12);
        let fit = ols2_closed_form(&triple).unwrap();
        assert!((fit.alpha1 - c.rho1y).abs() < 1e-10);
        assert!((fit.alpha2 - c.rho2y).abs() < 1e-10);
        assert!((fit.beta_sq - (1.0 - c.rho1y * c.rho1y - c.rho2y * c.rho2y)).abs() < 1e-10);
    }
    println!("ACCEPTANCE 2 (rho12 = 0 special case): PASS: reductions hold to 1e-10 on 5 seeds");
}

/// Criterion 3: at the realistic operating point alpha = (0.226, 0.627),
/// rho12 = 0.501, T = 1510, the mean fitted alpha over 200 seeds lies
/// within 2 Monte Carlo standard errors of the truth and both interval
/// constructions cover at 90% +/- 4 percentage points.
#[test]
fn criterion_3_coefficient_recovery_and_coverage() {
    let started = Instant::now();
    const RUNS: usize = 200;
    const TRUE_ALPHA: (f64, f64) = (0.226, 0.627);
    let mut fits1 = Vec::with_capacity(RUNS);
    let mut fits2 = Vec::with_capacity(RUNS);
    let mut cover = [0usize; 4]; // gauss1, gauss2, boot1, boot2
    for run in 0..RUNS {
        let model = FactorModel {
            len: 1510,
            alpha1: TRUE_ALPHA.0,
            alpha2: TRUE_ALPHA.1,
            rho12: 0.501,
            seed: 43_000 + run as u64,
        };
        let triple = generate_factor_triple(&model).unwrap();
        let fit = ols2_closed_form(&triple).unwrap();
        fits1.push(fit.alpha1);
        fits2.push(fit.alpha2);
        let (g1, g2) = gaussian_ci(&triple, 0.90).unwrap();
        let (b1, b2) = bootstrap_ci(&triple, 1000, 90_000_000 + run as u64 * 10_000).unwrap();
        cover[0] += usize::from(g1.contains(TRUE_ALPHA.0));
        cover[1] += usize::from(g2.contains(TRUE_ALPHA.1));
        cover[2] += usize::from(b1.contains(TRUE_ALPHA.0));
        cover[3] += usize::from(b2.contains(TRUE_ALPHA.1));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let sd = |v: &[f64], m: f64| {
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
    };
    let (m1, m2) = (mean(&fits1), mean(&fits2));
    let (se1, se2) = (sd(&fits1, m1) / (RUNS as f64).sqrt(), sd(&fits2, m2) / (RUNS as f64).sqrt());
    assert!(
        (m1 - TRUE_ALPHA.0).abs() <= 2.0 * se1,
        "mean alpha1 {m1} vs truth {} (MC SE {se1})",
        TRUE_ALPHA.0
    );
    assert!(
        (m2 - TRUE_ALPHA.1).abs() <= 2.0 * se2,
        "mean alpha2 {m2} vs truth {} (MC SE {se2})",
        TRUE_ALPHA.1
    );
    let rates: Vec<f64> = cover.iter().map(|c| *c as f64 / RUNS as f64).collect();
    for (label, rate) in ["gauss alpha1", "gauss alpha2", "boot alpha1", "boot alpha2"]
        .iter()
        .zip(&rates)
    {
        assert!(
            (0.86..=0.94).contains(rate),
            "{label} coverage {rate} outside 90% +/- 4pp"
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    println!(
        "ACCEPTANCE 3 (coefficient recovery): PASS: mean alpha = ({m1:.4}, {m2:.4}) vs truth \
         (0.226, 0.627) at MC SE ({se1:.4}, {se2:.4}); coverage gauss = ({:.3}, {:.3}), \
         boot = ({:.3}, {:.3}); elapsed {elapsed:?}",
        rates[0], rates[1], rates[2], rates[3]
    );
}

/// Criterion 4: the permutation-null correlation standard deviation at
/// T = 1510 with 1000 shuffles equals 1/sqrt(T) within 20%.
#[test]
fn criterion_4_permutation_null_constant() {
    let started = Instant::now();
    let model = FactorModel { len: 1510, alpha1: 0.3, alpha2: 0.4, rho12: 0.2, seed: 77 };
    let triple = generate_factor_triple(&model).unwrap();
    let null = permutation_null(triple.x1(), triple.y(), 1000, 2024).unwrap();
    let expected = 1.0 / (1510f64).sqrt();
    let relative = (null.std - expected).abs() / expected;
    assert!(relative <= 0.20, "null std {} vs 1/sqrt(T) {expected} ({relative:.3} relative)", null.std);
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    println!(
        "ACCEPTANCE 4 (permutation-null constant): PASS: null std {:.5} vs 1/sqrt(1510) = {expected:.5} \
         ({:.1}% off), mean {:.5}, elapsed {elapsed:?}",
        null.std,
        100.0 * relative,
        null.mean
    );
}

/// Criterion 5: the classifier agrees with a direct transcription of the
/// ratio rule on every integer volume pair in [0, 50]^2 and on the exact
/// q = theta boundary.
#[test]
fn criterion_5_classification_oracle() {
    let started = Instant::now();
    let theta = 0.01;
    let oracle = |bought: f64, sold: f64| -> TradingState {
        if bought == 0.0 && sold == 0.0 {
            return TradingState::Inactive;
        }
        let q = (bought - sold) / (bought + sold);
        if q > theta {
            TradingState::Buy
        } else if q < -theta {
            TradingState::Sell
        } else {
            TradingState::BuySell
        }
    };
    for bought in 0..=50u32 {
        for sold in 0..=50u32 {
            let (b, s) = (f64::from(bought), f64::from(sold));
            assert_eq!(
                classify_state(b, s, theta).unwrap(),
                oracle(b, s),
                "disagreement at ({bought}, {sold})"
            );
        }
    }
    // Exact boundary: q = 2/200 = theta must be BuySell, one share more Buy.
    assert_eq!(classify_state(101.0, 99.0, theta).unwrap(), TradingState::BuySell);
    assert_eq!(oracle(101.0, 99.0), TradingState::BuySell);
    assert_eq!(classify_state(102.0, 99.0, theta).unwrap(), TradingState::Buy);
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!(
        "ACCEPTANCE 5 (classification oracle): PASS: 2601 grid pairs + theta boundary agree, \
         elapsed {elapsed:?}"
    );
}

struct PipelineFits {
    activity: OlsFit,
    imbalance: OlsFit,
}

/// synth -> ingest -> classify -> marketvars/sentiment -> regress, all
/// through the public parsing APIs on the generated file bytes.
fn run_pipeline(config: &SynthConfig) -> PipelineFits {
    let market = generate_market_files(config).unwrap();

    let records = parse_transactions(
        market.transactions_csv.as_bytes(),
        &TransactionSchema::default(),
        b',',
    )
    .unwrap();
    let prices = parse_prices(market.prices_csv.as_bytes(), b',').unwrap();
    let calendar = TradingCalendar::from_prices(&prices).unwrap();
    let raw = parse_headlines(market.headlines_jsonl.as_bytes(), None).unwrap();
    let deduped = dedupe_headlines(&raw);
    let filtered = filter_trading_hours(&deduped, 0).unwrap();
    let buckets = bucket_headlines_by_day(&filtered, &calendar);
    let lexicon = PolarityLexicon::from_reader(market.lexicon_csv.as_bytes()).unwrap();

    let flows = build_flow_series(&records, &calendar, config.theta).unwrap();
    let market_vars = build_market_series(&prices, &calendar).unwrap();
    let news = build_news_series(&buckets.buckets, &lexicon, &calendar);

    let household = InvestorCategory::Households;
    let y_act = flows.values(household, |f| Some(f.n_total as f64));
    let x1_act: Vec<Option<f64>> =
        calendar.days().iter().map(|d| Some(f64::from(news[d].h))).collect();
    let x2_act: Vec<Option<f64>> =
        calendar.days().iter().map(|d| Some(market_vars[d].vol)).collect();
    let (triple_act, _) = align(&y_act, &x1_act, &x2_act).unwrap();
    let activity = ols2_closed_form(&triple_act.standardized().unwrap()).unwrap();

    let y_imb = flows.values(household, |f| f.imbalance_rel);
    let x1_imb: Vec<Option<f64>> =
        calendar.days().iter().map(|d| Some(news[d].s_rel)).collect();
    let x2_imb: Vec<Option<f64>> =
        calendar.days().iter().map(|d| market_vars[d].ret).collect();
    let (triple_imb, _) = align(&y_imb, &x1_imb, &x2_imb).unwrap();
    let imbalance = ols2_closed_form(&triple_imb.standardized().unwrap()).unwrap();

    PipelineFits { activity, imbalance }
}

/// Criterion 6: on a 1510-day, 1000-investor synthetic market the full
/// pipeline recovers the configured sign pattern (positive alpha_Vol in
/// the activity regression, negative alpha_Ret in the imbalance
/// regression) in at least 95% of 50 seeded runs.
#[test]
fn criterion_6_end_to_end_sign_recovery() {
    let started = Instant::now();
    const RUNS: u64 = 50;
    let base = SynthConfig::default();
    assert_eq!(base.n_days, 1510);
    assert_eq!(base.investors.total(), 1000);
    let mut successes = 0u32;
    for run in 0..RUNS {
        let config = SynthConfig { seed: 5_000 + run, ..base.clone() };
        let fits = run_pipeline(&config);
        let ok = fits.activity.alpha2 > 0.0 && fits.imbalance.alpha2 < 0.0;
        if ok {
            successes += 1;
        } else {
            println!(
                "seed {}: alpha_Vol = {:.4}, alpha_Ret = {:.4}",
                config.seed, fits.activity.alpha2, fits.imbalance.alpha2
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(
        successes >= 48,
        "sign pattern recovered in only {successes}/{RUNS} runs"
    );
    assert!(elapsed < Duration::from_secs(600), "took {elapsed:?}");
    println!(
        "ACCEPTANCE 6 (end-to-end sign recovery): PASS: {successes}/{RUNS} runs recovered \
         alpha_Vol > 0 and alpha_Ret < 0, elapsed {elapsed:?}"
    );
}

/// Criterion 8: equation-level unit identities.
#[test]
fn criterion_8_equation_level_identities() {
    // Volatility proxy at (110, 90).
    let vol = newsflow_core::compute_volatility(110.0, 90.0).unwrap();
    assert!((vol - 0.2).abs() < 1e-15, "vol {vol}");

    // Relative sentiment at G=2, B=3 (exactly five polarity words).
    let day = chrono::NaiveDate::from_ymd_opt(2003, 1, 2).unwrap();
    let vars = newsflow_core::sentiment::DailyNewsVars::from_counts(day, 1, 2, 3);
    assert!((vars.s_rel - (-0.2)).abs() < 1e-15, "s_rel {}", vars.s_rel);

    // Below the threshold the relative indicator is forced to zero.
    let sparse = newsflow_core::sentiment::DailyNewsVars::from_counts(day, 1, 2, 2);
    assert_eq!(sparse.s_rel, 0.0);
    let boundary = newsflow_core::sentiment::DailyNewsVars::from_counts(day, 1, 4, 0);
    assert_eq!(boundary.s_rel, 0.0, "G+B=4 is below the threshold");

    // Return telescoping over a seeded random price path.
    let mut rng = ChaCha8Rng::seed_from_u64(314);
    let mut day_iter = newsflow_core::trading_days(day, 300).into_iter();
    let mut price = 20.0f64;
    let prices: Vec<PriceRecord> = (0..300)
        .map(|_| {
            let shock: f64 = rng.random_range(-0.05..0.05);
            price *= (shock).exp();
            let d = day_iter.next().unwrap();
            PriceRecord { day: d, close: price, high: price * 1.01, low: price * 0.99 }
        })
        .collect();
    let calendar = TradingCalendar::from_prices(&prices).unwrap();
    let series = build_market_series(&prices, &calendar).unwrap();
    let total: f64 = series.values().filter_map(|v| v.ret).sum();
    let direct = (prices.last().unwrap().close / prices[0].close).ln();
    assert!(
        (total - direct).abs() < 1e-12,
        "telescoped {total} vs direct {direct}"
    );

    // AlignedTriple construction sanity for the identity inputs.
    assert!(AlignedTriple::new(vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]).is_err());

    println!(
        "ACCEPTANCE 8 (equation-level identities): PASS: Vol(110,90) = {vol}, S_R(2,3) = {}, \
         threshold zeroing holds, telescoping residual {:.2e}",
        vars.s_rel,
        (total - direct).abs()
    );
}
