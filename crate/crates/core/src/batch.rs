//! Offline correction: the teacher sees the whole realized count vector and
//! may move up to `b` observations between outcome classes.
//!
//! One altered observation costs one unit of budget and moves one unit of
//! count from one class to another, i.e. changes the count vector by 2 in
//! l1 distance.

use crate::combinatorics::{multiset_coefficient, Compositions};
use crate::error::{Error, Result};
use crate::observation::{counts_l1_error, Categorical, CountVector};

/// Exhaustive search is used while the number of count vectors with the
/// given total stays below this many.
pub const ENUMERATION_LIMIT: u128 = 2_000_000;

/// Errors closer than this are treated as ties.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub corrected: CountVector,
    pub corrections_used: u32,
    pub error: f64,
}

/// Number of single-observation changes needed to turn `from` into `to`.
pub fn move_distance(from: &[u32], to: &[u32]) -> u32 {
    let l1: u32 = from.iter().zip(to).map(|(a, b)| a.abs_diff(*b)).sum();
    l1 / 2
}

fn enumerable(n: u32, k: usize) -> bool {
    multiset_coefficient(k as u64, u64::from(n)).is_ok_and(|c| c <= ENUMERATION_LIMIT)
}

/// Smallest l1 error any `n`-sample empirical estimate can have against
/// `theta0`, together with a count vector attaining it.
pub fn e_min(n: u32, theta0: &Categorical) -> Result<(f64, CountVector)> {
    if n == 0 {
        return Err(Error::InvalidParameter("e_min needs n >= 1".into()));
    }
    if enumerable(n, theta0.k()) {
        e_min_enumerated(n, theta0)
    } else {
        e_min_largest_remainder(n, theta0)
    }
}

/// Exhaustive minimum over all count vectors summing to `n`; the
/// lexicographically smallest minimizer is returned.
pub fn e_min_enumerated(n: u32, theta0: &Categorical) -> Result<(f64, CountVector)> {
    if n == 0 {
        return Err(Error::InvalidParameter("e_min needs n >= 1".into()));
    }
    let mut best: Option<(f64, Vec<u32>)> = None;
    for c in Compositions::new(n, theta0.k()) {
        let err = counts_l1_error(&c, theta0)?;
        if best.as_ref().is_none_or(|(e, _)| err < e - TIE_TOLERANCE) {
            best = Some((err, c));
        }
    }
    let (err, c) = best.expect("at least one composition");
    Ok((err, c.into()))
}

/// Largest-remainder apportionment: floor every `θ_i n`, then hand the
/// leftover units to the largest fractional parts (ties to the lowest index).
pub fn e_min_largest_remainder(n: u32, theta0: &Categorical) -> Result<(f64, CountVector)> {
    if n == 0 {
        return Err(Error::InvalidParameter("e_min needs n >= 1".into()));
    }
    let nf = f64::from(n);
    let targets: Vec<f64> = theta0.probs().iter().map(|p| p * nf).collect();
    let mut counts: Vec<u32> = targets.iter().map(|t| t.floor() as u32).collect();
    let assigned: u32 = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = targets[a] - targets[a].floor();
        let fb = targets[b] - targets[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    let err = counts_l1_error(&counts, theta0)?;
    Ok((err, counts.into()))
}

/// `max{ ||θ₀ - θ̂||₁ - 2b/n, e_min(n, θ₀) }`, the per-sequence optimum for
/// two outcomes.
pub fn attainable_error(
    n: u32,
    theta0: &Categorical,
    budget: u32,
    theta_hat: &Categorical,
) -> Result<f64> {
    if theta0.k() != 2 {
        return Err(Error::BinomialOnly(theta0.k()));
    }
    if theta_hat.k() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: theta_hat.k(),
        });
    }
    let nf = f64::from(n);
    let counts = theta_hat
        .probs()
        .iter()
        .map(|p| {
            let scaled = p * nf;
            let rounded = scaled.round();
            if (scaled - rounded).abs() > 1e-9 {
                Err(Error::InvalidParameter(format!(
                    "estimate {theta_hat} is not realizable with {n} observations"
                )))
            } else {
                Ok(rounded as u32)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    attainable_error_from_counts(&counts, theta0, budget)
}

/// [`attainable_error`] evaluated directly on the realized counts.
pub fn attainable_error_from_counts(counts: &[u32], theta0: &Categorical, budget: u32) -> Result<f64> {
    if theta0.k() != 2 {
        return Err(Error::BinomialOnly(theta0.k()));
    }
    let n: u32 = counts.iter().sum();
    let nf = f64::from(n);
    let dev: f64 = counts
        .iter()
        .zip(theta0.probs())
        .map(|(&c, &p)| (f64::from(c) - nf * p).abs())
        .sum();
    let reduced = (dev - 2.0 * f64::from(budget)) / nf;
    let (floor, _) = e_min(n, theta0)?;
    Ok(reduced.max(floor))
}

/// Best correction of `counts` using at most `budget` moved observations.
/// Ties go to the lexicographically smallest corrected vector.
pub fn batch_correct(counts: &CountVector, theta0: &Categorical, budget: u32) -> Result<BatchResult> {
    let n = counts.total();
    if n == 0 {
        return Err(Error::NoObservations);
    }
    if counts.k() != theta0.k() {
        return Err(Error::DimensionMismatch {
            expected: theta0.k(),
            got: counts.k(),
        });
    }
    if enumerable(n, counts.k()) {
        batch_correct_exhaustive(counts, theta0, budget)
    } else {
        batch_correct_greedy(counts, theta0, budget)
    }
}

pub fn batch_correct_exhaustive(
    counts: &CountVector,
    theta0: &Categorical,
    budget: u32,
) -> Result<BatchResult> {
    let original = counts.as_slice();
    let n = counts.total();
    let mut best: Option<(f64, Vec<u32>)> = None;
    for c in Compositions::new(n, counts.k()) {
        if move_distance(original, &c) > budget {
            continue;
        }
        let err = counts_l1_error(&c, theta0)?;
        if best.as_ref().is_none_or(|(e, _)| err < e - TIE_TOLERANCE) {
            best = Some((err, c));
        }
    }
    let (error, corrected) = best.expect("the original counts are always feasible");
    Ok(BatchResult {
        corrections_used: move_distance(original, &corrected),
        corrected: corrected.into(),
        error,
    })
}

/// Repeatedly moves one observation from the class whose removal helps most
/// to the class whose addition helps most, while that strictly improves the
/// error. The objective is separable and convex per class, so each move is
/// a best unit augmentation and the result is optimal; the tie-break among
/// optimal vectors can differ from the exhaustive search.
pub fn batch_correct_greedy(
    counts: &CountVector,
    theta0: &Categorical,
    budget: u32,
) -> Result<BatchResult> {
    let n = counts.total();
    if n == 0 {
        return Err(Error::NoObservations);
    }
    let nf = f64::from(n);
    let targets: Vec<f64> = theta0.probs().iter().map(|p| p * nf).collect();
    let dev = |c: u32, t: f64| (f64::from(c) - t).abs();
    let mut c = counts.as_slice().to_vec();
    for _ in 0..budget {
        let mut best: Option<(f64, usize, usize)> = None;
        for from in 0..c.len() {
            if c[from] == 0 {
                continue;
            }
            let dec = dev(c[from], targets[from]) - dev(c[from] - 1, targets[from]);
            for to in (0..c.len()).filter(|&to| to != from) {
                let inc = dev(c[to], targets[to]) - dev(c[to] + 1, targets[to]);
                let gain = dec + inc;
                if best.is_none_or(|(g, _, _)| gain > g + TIE_TOLERANCE) {
                    best = Some((gain, from, to));
                }
            }
        }
        match best {
            Some((gain, from, to)) if gain > TIE_TOLERANCE => {
                c[from] -= 1;
                c[to] += 1;
            }
            _ => break,
        }
    }
    let error = counts_l1_error(&c, theta0)?;
    Ok(BatchResult {
        corrections_used: move_distance(counts.as_slice(), &c),
        corrected: c.into(),
        error,
    })
}
