//! Variance reduction achievable by a teacher that may shift the sum of `N`
//! bounded observations by at most `B` units, and Monte-Carlo checks of the
//! Hoeffding-based bound on it.
//!
//! Observations take values in `{0, ..., M}`, so `M` here is the largest
//! value, one less than the number of outcomes.

use rand::Rng;

use crate::error::{Error, Result};
use crate::observation::Seed;

/// Minimum number of trials accepted by [`monte_carlo_report`].
pub const MIN_TRIALS: u64 = 1000;

/// Moves the sum `y` at most `budget` units toward `target`, staying inside
/// `[0, max_sum]`. Equidistant candidates resolve to the smaller value, so
/// the projection of every `y` lands on the same point once the budget is
/// large enough.
pub fn project_sum(y: u64, target: f64, budget: u64, max_sum: u64) -> u64 {
    let lo = y.saturating_sub(budget);
    let hi = y.saturating_add(budget).min(max_sum).max(lo);
    if target <= lo as f64 {
        return lo;
    }
    if target >= hi as f64 {
        return hi;
    }
    let below = target.floor() as u64;
    let above = target.ceil() as u64;
    if target - below as f64 <= above as f64 - target {
        below
    } else {
        above
    }
}

fn decay(n: u64, m: u64, b: u64) -> f64 {
    let (n, m, b) = (n as f64, m as f64, b as f64);
    (-2.0 * b * b / (n * m * m)).exp()
}

/// `M² exp(-2B² / (N M²))`, the absolute bound on `var[Ỹ/N]`.
pub fn var_bound_abs(n: u64, m: u64, b: u64) -> f64 {
    (m * m) as f64 * decay(n, m, b)
}

/// `6M / (5M + 1) exp(-2B² / (N M²))`, the ratio bound as usually quoted.
/// It divides by `(5M² + M) / 6`, which is not the variance of the uniform
/// distribution on `{0, ..., M}`; see [`uniform_variance`].
pub fn var_bound_ratio_paper(n: u64, m: u64, b: u64) -> f64 {
    let mf = m as f64;
    6.0 * mf / (5.0 * mf + 1.0) * decay(n, m, b)
}

/// The same ratio bound using the true uniform variance `M(M + 2) / 12`:
/// `12M / (M + 2) exp(-2B² / (N M²))`.
pub fn var_bound_ratio_corrected(n: u64, m: u64, b: u64) -> f64 {
    let mf = m as f64;
    12.0 * mf / (mf + 2.0) * decay(n, m, b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformVariance {
    /// `(5M² + M) / 6`.
    pub printed: f64,
    /// `M(M + 2) / 12`, the variance of one `Unif{0, ..., M}` draw.
    pub exact: f64,
}

pub fn uniform_variance(m: u64) -> UniformVariance {
    let mf = m as f64;
    UniformVariance {
        printed: (5.0 * mf * mf + mf) / 6.0,
        exact: mf * (mf + 2.0) / 12.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub n: u64,
    pub m: u64,
    pub b: u64,
    pub trials: u64,
    pub bound_abs: f64,
    pub bound_ratio_paper: f64,
    pub bound_ratio_corrected: f64,
    /// Sample variance of `Y / N`.
    pub var_original: f64,
    /// Standard error of `var_original`.
    pub var_original_std_error: f64,
    /// Sample variance of `Ỹ / N`.
    pub var_corrected: f64,
    pub ratio: f64,
}

/// Samples `trials` sums of `n` uniform draws on `{0, ..., m}`, projects each
/// toward `n m / 2` with budget `b`, and compares the empirical variances
/// with the analytic bounds. The sampled sums depend only on `(n, m, seed)`,
/// so reports for different `b` share the same draws.
pub fn monte_carlo_report(n: u64, m: u64, b: u64, trials: u64, seed: Seed) -> Result<BoundReport> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("need N >= 1 and M >= 1".into()));
    }
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    let max_sum = n * m;
    let target = max_sum as f64 / 2.0;
    let mut rng = seed.rng(0);
    let mut original = Vec::with_capacity(trials as usize);
    let mut corrected = Vec::with_capacity(trials as usize);
    for _ in 0..trials {
        let y: u64 = (0..n).map(|_| rng.random_range(0..=m)).sum();
        let z = project_sum(y, target, b, max_sum);
        if y.abs_diff(z) > b {
            return Err(Error::InvariantViolation(format!(
                "projection moved {y} to {z} with budget {b}"
            )));
        }
        original.push(y as f64 / n as f64);
        corrected.push(z as f64 / n as f64);
    }
    let (var_original, var_original_std_error) = variance_with_std_error(&original);
    let (var_corrected, _) = variance_with_std_error(&corrected);
    Ok(BoundReport {
        n,
        m,
        b,
        trials,
        bound_abs: var_bound_abs(n, m, b),
        bound_ratio_paper: var_bound_ratio_paper(n, m, b),
        bound_ratio_corrected: var_bound_ratio_corrected(n, m, b),
        var_original,
        var_original_std_error,
        var_corrected,
        ratio: if var_original > 0.0 {
            var_corrected / var_original
        } else {
            0.0
        },
    })
}

/// Unbiased sample variance and its large-sample standard error
/// `sqrt((m4 - s⁴ (n-3)/(n-1)) / n)`.
pub fn variance_with_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return (0.0, 0.0);
    }
    // Shifting by the first sample makes constant input give exactly zero.
    let shift = xs[0];
    let mean = xs.iter().map(|x| x - shift).sum::<f64>() / n;
    let (m2, m4) = xs.iter().fold((0.0, 0.0), |(m2, m4), x| {
        let d = x - shift - mean;
        let d2 = d * d;
        (m2 + d2, m4 + d2 * d2)
    });
    let var = m2 / (n - 1.0);
    let m4 = m4 / n;
    let se = ((m4 - var * var * (n - 3.0) / (n - 1.0)).max(0.0) / n).sqrt();
    (var, se)
}
