//! The statistical engine: standardization, Pearson and partial
//! correlations, the two-regressor standardized OLS closed form, Gaussian
//! and pairs-bootstrap confidence intervals, autocorrelation with 2-sigma
//! significance bands, and permutation-null correlation tests.
//!
//! Standardization uses the population denominator `T`, so pairwise
//! correlations of standardized series are plain inner products over `T`
//! and the closed-form algebra holds without `(T-1)/T` factors.
//!
//! All stochastic routines take explicit seeds and derive the RNG for
//! draw `i` as ChaCha8 seeded with `seed + i`, so serial and parallel
//! evaluation orders produce identical results.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Two-sided confidence level for the 5%-95% intervals.
pub const DEFAULT_CI_LEVEL: f64 = 0.90;
/// Default number of bootstrap replicates.
pub const DEFAULT_BOOTSTRAP_REPLICATES: usize = 10_000;
/// Fits abort when `|rho12| >= 1 - COLLINEARITY_TOLERANCE`.
pub const COLLINEARITY_TOLERANCE: f64 = 1e-12;
/// Tolerance for the internal algebraic identity checks.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
/// Retry cap for degenerate bootstrap resamples.
const BOOTSTRAP_RETRY_CAP: usize = 100;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("series too short: {len} < {min}")]
    TooShort { len: usize, min: usize },
    #[error("series is constant (zero variance)")]
    ConstantSeries,
    #[error("series contains a non-finite value")]
    NonFinite,
    #[error("regressors are collinear (rho12 = {rho12})")]
    CollinearRegressors { rho12: f64 },
    #[error("degenerate correlation structure (|rho| = {rho} too close to 1)")]
    DegenerateCorrelation { rho: f64 },
    #[error("sample size {t} too small for Gaussian intervals (need T > 3)")]
    SampleTooSmall { t: usize },
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("bootstrap requires at least 1000 replicates, got {0}")]
    TooFewReplicates(usize),
    #[error("replicate {replicate}: no valid resample after {BOOTSTRAP_RETRY_CAP} retries")]
    ResampleRetriesExhausted { replicate: usize },
    #[error("permutation null requires at least 2 shuffles, got {0}")]
    TooFewShuffles(usize),
    #[error("{name} is zero; the duality ratio is undefined")]
    DivisionGuard { name: &'static str },
    #[error("internal identity `{name}` violated (discrepancy {discrepancy:e})")]
    IdentityViolation { name: &'static str, discrepancy: f64 },
}

/// Three synchronously sampled series of equal length with no undefined
/// entries. Rows with undefined values are dropped by [`align`] before
/// construction.
#[derive(Debug, Clone)]
pub struct AlignedTriple {
    y: Vec<f64>,
    x1: Vec<f64>,
    x2: Vec<f64>,
}

impl AlignedTriple {
    pub fn new(y: Vec<f64>, x1: Vec<f64>, x2: Vec<f64>) -> Result<AlignedTriple, StatsError> {
        if y.len() != x1.len() {
            return Err(StatsError::LengthMismatch { left: y.len(), right: x1.len() });
        }
        if y.len() != x2.len() {
            return Err(StatsError::LengthMismatch { left: y.len(), right: x2.len() });
        }
        if y.len() < 3 {
            return Err(StatsError::TooShort { len: y.len(), min: 3 });
        }
        if [&y, &x1, &x2].iter().any(|s| s.iter().any(|v| !v.is_finite())) {
            return Err(StatsError::NonFinite);
        }
        Ok(AlignedTriple { y, x1, x2 })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x1(&self) -> &[f64] {
        &self.x1
    }

    pub fn x2(&self) -> &[f64] {
        &self.x2
    }

    /// Standardize all three series to zero mean and unit T-variance.
    pub fn standardized(&self) -> Result<AlignedTriple, StatsError> {
        Ok(AlignedTriple {
            y: standardize(&self.y)?,
            x1: standardize(&self.x1)?,
            x2: standardize(&self.x2)?,
        })
    }
}

/// Listwise deletion: keep rows where all three entries are defined.
/// Returns the aligned triple and the number of dropped rows.
pub fn align(
    y: &[Option<f64>],
    x1: &[Option<f64>],
    x2: &[Option<f64>],
) -> Result<(AlignedTriple, usize), StatsError> {
    if y.len() != x1.len() {
        return Err(StatsError::LengthMismatch { left: y.len(), right: x1.len() });
    }
    if y.len() != x2.len() {
        return Err(StatsError::LengthMismatch { left: y.len(), right: x2.len() });
    }
    let mut ys = Vec::with_capacity(y.len());
    let mut x1s = Vec::with_capacity(y.len());
    let mut x2s = Vec::with_capacity(y.len());
    let mut dropped = 0usize;
    for i in 0..y.len() {
        match (y[i], x1[i], x2[i]) {
            (Some(a), Some(b), Some(c)) => {
                ys.push(a);
                x1s.push(b);
                x2s.push(c);
            }
            _ => dropped += 1,
        }
    }
    Ok((AlignedTriple::new(ys, x1s, x2s)?, dropped))
}

/// Standardize to zero mean and unit variance with denominator `T`.
pub fn standardize(series: &[f64]) -> Result<Vec<f64>, StatsError> {
    let t = series.len();
    if t < 2 {
        return Err(StatsError::TooShort { len: t, min: 2 });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mean = series.iter().sum::<f64>() / t as f64;
    let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t as f64;
    if var == 0.0 {
        return Err(StatsError::ConstantSeries);
    }
    let sd = var.sqrt();
    Ok(series.iter().map(|v| (v - mean) / sd).collect())
}

/// Product-moment correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(StatsError::TooShort { len: x.len(), min: 2 });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (xv, yv) in x.iter().zip(y) {
        let dx = xv - mx;
        let dy = yv - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantSeries);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Pairwise correlations of an aligned triple.
#[derive(Debug, Clone, Copy)]
pub struct TripleCorrelations {
    pub rho12: f64,
    pub rho1y: f64,
    pub rho2y: f64,
}

/// Correlations of a standardized triple, computed as inner products over
/// `T`. On standardized series this equals the Pearson coefficient; using
/// the inner products directly keeps the closed form identical to the
/// no-intercept least-squares solution on the series as given.
pub fn triple_correlations(triple: &AlignedTriple) -> TripleCorrelations {
    let t = triple.len() as f64;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / t;
    TripleCorrelations {
        rho12: dot(triple.x1(), triple.x2()),
        rho1y: dot(triple.x1(), triple.y()),
        rho2y: dot(triple.x2(), triple.y()),
    }
}

/// Standardized two-regressor OLS coefficients and residual variance
/// fraction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OlsFit {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta_sq: f64,
}

fn closed_form_from_correlations(c: &TripleCorrelations) -> Result<OlsFit, StatsError> {
    if c.rho12.abs() >= 1.0 - COLLINEARITY_TOLERANCE {
        return Err(StatsError::CollinearRegressors { rho12: c.rho12 });
    }
    let denom = 1.0 - c.rho12 * c.rho12;
    let alpha1 = (c.rho1y - c.rho2y * c.rho12) / denom;
    let alpha2 = (c.rho2y - c.rho1y * c.rho12) / denom;
    // Residual variance from the determinant of the 3x3 correlation matrix;
    // must agree with the variance decomposition.
    let gamma_det = 1.0 - c.rho12 * c.rho12 - c.rho1y * c.rho1y - c.rho2y * c.rho2y
        + 2.0 * c.rho12 * c.rho1y * c.rho2y;
    let beta_sq = gamma_det / denom;
    let beta_sq_decomposed = 1.0 - alpha1 * alpha1 - alpha2 * alpha2 - 2.0 * alpha1 * alpha2 * c.rho12;
    let discrepancy = (beta_sq - beta_sq_decomposed).abs();
    if discrepancy >= IDENTITY_TOLERANCE {
        return Err(StatsError::IdentityViolation { name: "beta_sq", discrepancy });
    }
    let beta_sq = if (-IDENTITY_TOLERANCE..0.0).contains(&beta_sq) {
        0.0
    } else if (1.0..1.0 + IDENTITY_TOLERANCE).contains(&beta_sq) {
        1.0
    } else {
        beta_sq
    };
    if !(0.0..=1.0).contains(&beta_sq) {
        return Err(StatsError::IdentityViolation { name: "beta_sq_range", discrepancy: beta_sq });
    }
    Ok(OlsFit { alpha1, alpha2, beta_sq })
}

/// Closed-form standardized OLS of `y` on `(x1, x2)`.
///
/// Expects standardized input; the coefficients come from the pairwise
/// correlations, `alpha1 = (rho1y - rho2y rho12) / (1 - rho12^2)` and
/// symmetrically for `alpha2`, with the residual variance fraction
/// `beta_sq = |Gamma| / (1 - rho12^2)`.
pub fn ols2_closed_form(triple: &AlignedTriple) -> Result<OlsFit, StatsError> {
    closed_form_from_correlations(&triple_correlations(triple))
}

fn partials_from_correlations(c: &TripleCorrelations) -> Result<(f64, f64), StatsError> {
    for rho in [c.rho12, c.rho1y, c.rho2y] {
        if 1.0 - rho * rho < COLLINEARITY_TOLERANCE {
            return Err(StatsError::DegenerateCorrelation { rho });
        }
    }
    let d12 = 1.0 - c.rho12 * c.rho12;
    let pc1 = (c.rho1y - c.rho2y * c.rho12) / ((1.0 - c.rho2y * c.rho2y) * d12).sqrt();
    let pc2 = (c.rho2y - c.rho1y * c.rho12) / ((1.0 - c.rho1y * c.rho1y) * d12).sqrt();
    Ok((pc1, pc2))
}

/// Partial correlations `rho(y, x1 | x2)` and `rho(y, x2 | x1)`.
pub fn partial_correlations(triple: &AlignedTriple) -> Result<(f64, f64), StatsError> {
    partials_from_correlations(&triple_correlations(triple))
}

/// A two-sided confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }
}

/// Gaussian confidence intervals for both coefficients.
///
/// Standard OLS covariance: residual variance with denominator `T - 2`
/// times the inverse regressor cross-product matrix, with the two-sided
/// normal quantile for `level` (1.645 at the default 0.90).
pub fn gaussian_ci(
    triple: &AlignedTriple,
    level: f64,
) -> Result<(Interval, Interval), StatsError> {
    if !(0.0 < level && level < 1.0) {
        return Err(StatsError::InvalidLevel(level));
    }
    let t = triple.len();
    if t <= 3 {
        return Err(StatsError::SampleTooSmall { t });
    }
    let fit = ols2_closed_form(triple)?;

    let (y, x1, x2) = (triple.y(), triple.x1(), triple.x2());
    let mut rss = 0.0;
    let mut s11 = 0.0;
    let mut s22 = 0.0;
    let mut s12 = 0.0;
    for i in 0..t {
        let r = y[i] - fit.alpha1 * x1[i] - fit.alpha2 * x2[i];
        rss += r * r;
        s11 += x1[i] * x1[i];
        s22 += x2[i] * x2[i];
        s12 += x1[i] * x2[i];
    }
    let det = s11 * s22 - s12 * s12;
    if det <= 0.0 {
        return Err(StatsError::CollinearRegressors { rho12: 1.0 });
    }
    let sigma_sq = rss / (t as f64 - 2.0);
    let se1 = (sigma_sq * s22 / det).sqrt();
    let se2 = (sigma_sq * s11 / det).sqrt();
    let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.5 + level / 2.0);
    Ok((
        Interval { lo: fit.alpha1 - z * se1, hi: fit.alpha1 + z * se1 },
        Interval { lo: fit.alpha2 - z * se2, hi: fit.alpha2 + z * se2 },
    ))
}

/// Nearest-rank percentile of a sorted slice, `q` in (0, 1).
fn percentile_nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Nonparametric pairs bootstrap intervals for both coefficients.
///
/// Resamples whole row-triples with replacement, re-standardizes each
/// resample, refits the closed form, and reports the 5th and 95th
/// percentiles of each coefficient. Replicate `i` draws from a ChaCha8
/// stream seeded with `seed + i`; degenerate resamples (a constant series
/// or collinear regressors) are redrawn, capped at 100 retries.
pub fn bootstrap_ci(
    triple: &AlignedTriple,
    replicates: usize,
    seed: u64,
) -> Result<(Interval, Interval), StatsError> {
    if replicates < 1000 {
        return Err(StatsError::TooFewReplicates(replicates));
    }
    let t = triple.len();
    let mut alpha1s = Vec::with_capacity(replicates);
    let mut alpha2s = Vec::with_capacity(replicates);
    let mut indices = vec![0usize; t];
    for replicate in 0..replicates {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(replicate as u64));
        let mut fitted = None;
        for _ in 0..BOOTSTRAP_RETRY_CAP {
            for slot in indices.iter_mut() {
                *slot = rng.random_range(0..t);
            }
            let resampled = AlignedTriple {
                y: indices.iter().map(|&i| triple.y[i]).collect(),
                x1: indices.iter().map(|&i| triple.x1[i]).collect(),
                x2: indices.iter().map(|&i| triple.x2[i]).collect(),
            };
            match resampled.standardized().and_then(|std| ols2_closed_form(&std)) {
                Ok(fit) => {
                    fitted = Some(fit);
                    break;
                }
                Err(StatsError::ConstantSeries) | Err(StatsError::CollinearRegressors { .. }) => {
                    continue;
                }
                Err(other) => return Err(other),
            }
        }
        let fit = fitted.ok_or(StatsError::ResampleRetriesExhausted { replicate })?;
        alpha1s.push(fit.alpha1);
        alpha2s.push(fit.alpha2);
    }
    alpha1s.sort_by(|a, b| a.total_cmp(b));
    alpha2s.sort_by(|a, b| a.total_cmp(b));
    Ok((
        Interval {
            lo: percentile_nearest_rank(&alpha1s, 0.05),
            hi: percentile_nearest_rank(&alpha1s, 0.95),
        },
        Interval {
            lo: percentile_nearest_rank(&alpha2s, 0.05),
            hi: percentile_nearest_rank(&alpha2s, 0.95),
        },
    ))
}

/// Full output of one (response, regressor-pair) fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionReport {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta_sq: f64,
    pub rho12: f64,
    pub rho1y: f64,
    pub rho2y: f64,
    pub pc1: f64,
    pub pc2: f64,
    pub ci_gauss_1: Interval,
    pub ci_gauss_2: Interval,
    pub ci_boot_1: Interval,
    pub ci_boot_2: Interval,
    pub t: usize,
}

/// Absolute discrepancy of the regression/partial-correlation duality:
/// `alpha1/alpha2` against
/// `(pc1/pc2) * sqrt((1 - rho2y^2) / (1 - rho1y^2))`.
pub fn duality_check(report: &RegressionReport) -> Result<f64, StatsError> {
    if report.alpha2 == 0.0 {
        return Err(StatsError::DivisionGuard { name: "alpha2" });
    }
    if report.pc2 == 0.0 {
        return Err(StatsError::DivisionGuard { name: "pc2" });
    }
    let denom = 1.0 - report.rho1y * report.rho1y;
    if denom < COLLINEARITY_TOLERANCE {
        return Err(StatsError::DegenerateCorrelation { rho: report.rho1y });
    }
    let lhs = report.alpha1 / report.alpha2;
    let rhs = (report.pc1 / report.pc2) * ((1.0 - report.rho2y * report.rho2y) / denom).sqrt();
    Ok((lhs - rhs).abs())
}

/// Options for [`regress`].
#[derive(Debug, Clone)]
pub struct RegressOptions {
    pub ci_level: f64,
    pub bootstrap_replicates: usize,
    pub seed: u64,
}

impl Default for RegressOptions {
    fn default() -> Self {
        RegressOptions {
            ci_level: DEFAULT_CI_LEVEL,
            bootstrap_replicates: DEFAULT_BOOTSTRAP_REPLICATES,
            seed: 42,
        }
    }
}

/// Standardize, fit the closed form, compute partial correlations, and
/// attach Gaussian and bootstrap intervals.
///
/// The duality identity is verified on every fit where both `alpha2` and
/// `pc2` are comfortably away from zero (at least 1e-3 in magnitude; below
/// that the ratio amplifies rounding noise past the identity tolerance).
pub fn regress(
    triple: &AlignedTriple,
    options: &RegressOptions,
) -> Result<RegressionReport, StatsError> {
    let standardized = triple.standardized()?;
    let correlations = triple_correlations(&standardized);
    let fit = closed_form_from_correlations(&correlations)?;
    let (pc1, pc2) = partials_from_correlations(&correlations)?;
    let (ci_gauss_1, ci_gauss_2) = gaussian_ci(&standardized, options.ci_level)?;
    let (ci_boot_1, ci_boot_2) =
        bootstrap_ci(&standardized, options.bootstrap_replicates, options.seed)?;
    let report = RegressionReport {
        alpha1: fit.alpha1,
        alpha2: fit.alpha2,
        beta_sq: fit.beta_sq,
        rho12: correlations.rho12,
        rho1y: correlations.rho1y,
        rho2y: correlations.rho2y,
        pc1,
        pc2,
        ci_gauss_1,
        ci_gauss_2,
        ci_boot_1,
        ci_boot_2,
        t: triple.len(),
    };
    if report.alpha2.abs() >= 1e-3 && report.pc2.abs() >= 1e-3 {
        let discrepancy = duality_check(&report)?;
        if discrepancy >= IDENTITY_TOLERANCE {
            return Err(StatsError::IdentityViolation { name: "duality", discrepancy });
        }
    }
    Ok(report)
}

/// One autocorrelation estimate with its 2-sigma significance flag.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AcfPoint {
    pub lag: usize,
    pub value: f64,
    pub significant: bool,
}

/// Sample autocorrelation function for lags `0..=max_lag`, flagging lags
/// whose magnitude exceeds the white-noise band `2 / sqrt(T)`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<AcfPoint>, StatsError> {
    let t = series.len();
    if t <= max_lag + 2 {
        return Err(StatsError::TooShort { len: t, min: max_lag + 3 });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mean = series.iter().sum::<f64>() / t as f64;
    let c0: f64 = series.iter().map(|v| (v - mean).powi(2)).sum();
    if c0 == 0.0 {
        return Err(StatsError::ConstantSeries);
    }
    let band = 2.0 / (t as f64).sqrt();
    let mut out = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let ck: f64 = (lag..t).map(|i| (series[i] - mean) * (series[i - lag] - mean)).sum();
        let value = ck / c0;
        out.push(AcfPoint { lag, value, significant: value.abs() > band });
    }
    Ok(out)
}

/// Mean and standard deviation of the correlation between `x` and random
/// permutations of `y`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PermutationNull {
    pub mean: f64,
    pub std: f64,
    pub shuffles: usize,
}

/// Shuffle `y` uniformly `n_shuffles` times, recomputing the Pearson
/// correlation each time. Shuffle `i` uses a ChaCha8 stream seeded with
/// `seed + i`.
pub fn permutation_null(
    x: &[f64],
    y: &[f64],
    n_shuffles: usize,
    seed: u64,
) -> Result<PermutationNull, StatsError> {
    if n_shuffles < 2 {
        return Err(StatsError::TooFewShuffles(n_shuffles));
    }
    // Validate inputs up front so the shuffle loop cannot fail midway.
    pearson(x, y)?;
    let mut correlations = Vec::with_capacity(n_shuffles);
    let mut permuted = y.to_vec();
    for i in 0..n_shuffles {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        permuted.copy_from_slice(y);
        permuted.shuffle(&mut rng);
        correlations.push(pearson(x, &permuted)?);
    }
    let n = correlations.len() as f64;
    let mean = correlations.iter().sum::<f64>() / n;
    let var = correlations.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(PermutationNull { mean, std: var.sqrt(), shuffles: n_shuffles })
}
