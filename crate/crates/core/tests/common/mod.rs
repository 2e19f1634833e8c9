//! Test-only oracles, independent of the library's closed-form paths.

/// Numerically minimize `f(a1, a2) = sum (y_i - a1 x1_i - a2 x2_i)^2` by
/// steepest descent with exact line search (the objective is quadratic, so
/// the step along the negative gradient has a closed expression). This is
/// deliberately an iterative route so it shares no algebra with the
/// correlation-based closed form it cross-checks.
pub fn least_squares_minimizer(y: &[f64], x1: &[f64], x2: &[f64]) -> (f64, f64) {
    let t = y.len();
    let mut a1 = 0.0f64;
    let mut a2 = 0.0f64;
    for _ in 0..200_000 {
        let mut g1 = 0.0;
        let mut g2 = 0.0;
        for i in 0..t {
            let r = y[i] - a1 * x1[i] - a2 * x2[i];
            g1 -= 2.0 * r * x1[i];
            g2 -= 2.0 * r * x2[i];
        }
        if g1 * g1 + g2 * g2 < 1e-26 {
            break;
        }
        let (d1, d2) = (-g1, -g2);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..t {
            let u = d1 * x1[i] + d2 * x2[i];
            let r = y[i] - a1 * x1[i] - a2 * x2[i];
            num += r * u;
            den += u * u;
        }
        if den <= 0.0 {
            break;
        }
        let step = num / den;
        a1 += step * d1;
        a2 += step * d2;
    }
    (a1, a2)
}

fn simple_ols_residuals(target: &[f64], on: &[f64]) -> Vec<f64> {
    let n = target.len() as f64;
    let mt = target.iter().sum::<f64>() / n;
    let mo = on.iter().sum::<f64>() / n;
    let cov = target.iter().zip(on).map(|(a, b)| (a - mt) * (b - mo)).sum::<f64>();
    let var = on.iter().map(|b| (b - mo).powi(2)).sum::<f64>();
    let slope = cov / var;
    target
        .iter()
        .zip(on)
        .map(|(a, b)| (a - mt) - slope * (b - mo))
        .collect()
}

fn plain_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Partial correlations via the defining construction: regress each
/// variable on the conditioning regressor and correlate the residuals.
pub fn residual_partial_correlations(y: &[f64], x1: &[f64], x2: &[f64]) -> (f64, f64) {
    let pc1 = plain_pearson(&simple_ols_residuals(y, x2), &simple_ols_residuals(x1, x2));
    let pc2 = plain_pearson(&simple_ols_residuals(y, x1), &simple_ols_residuals(x2, x1));
    (pc1, pc2)
}
