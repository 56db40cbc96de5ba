//! Value types shared by every module: outcome distributions, observation
//! sequences, per-outcome tallies, seeds, and the student's empirical
//! estimator.
//!
//! Outcomes are indexed `0..k` where `k` is the number of distinct values.
//! A sequence over `{0, ..., M}` therefore has `k = M + 1`.

use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Tolerance on the total mass of a [`Categorical`].
pub const PROB_SUM_TOLERANCE: f64 = 1e-12;

/// Probability vector over `k >= 2` outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    probs: Vec<f64>,
}

impl Categorical {
    /// Validates `probs`. A total within [`PROB_SUM_TOLERANCE`] of one is
    /// renormalized; anything further off is rejected.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidDistribution(format!(
                "need at least 2 outcomes, got {}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0) {
            return Err(Error::InvalidDistribution(format!(
                "entry {p} outside [0, 1]"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}, not 1"
            )));
        }
        let probs = if total == 1.0 {
            probs
        } else {
            probs.into_iter().map(|p| p / total).collect()
        };
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidDistribution(format!(
                "need at least 2 outcomes, got {k}"
            )));
        }
        Ok(Self {
            probs: vec![1.0 / k as f64; k],
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, outcome: usize) -> f64 {
        self.probs[outcome]
    }
}

impl fmt::Display for Categorical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, p) in self.probs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "]")
    }
}

/// Ordered observations `y_1, ..., y_n`, each an outcome index below `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ObservationSequence {
    values: Vec<usize>,
    k: usize,
}

impl ObservationSequence {
    pub fn new(values: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&value) = values.iter().find(|&&v| v >= k) {
            return Err(Error::OutcomeOutOfRange { value, k });
        }
        Ok(Self { values, k })
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-outcome tallies. The count vector is the sufficient statistic for
/// every estimator in this crate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CountVector(Vec<u32>);

impl CountVector {
    pub fn new(counts: Vec<u32>) -> Self {
        Self(counts)
    }

    pub fn zeros(k: usize) -> Self {
        Self(vec![0; k])
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }
}

impl From<Vec<u32>> for CountVector {
    fn from(counts: Vec<u32>) -> Self {
        Self(counts)
    }
}

impl std::ops::Index<usize> for CountVector {
    type Output = u32;
    fn index(&self, i: usize) -> &u32 {
        &self.0[i]
    }
}

impl fmt::Display for CountVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Experiment seed. Each trial draws from its own ChaCha stream keyed by
/// `(seed, trial)`, so results do not depend on evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }
}

/// Normalizes counts into the student's estimate `[θ]_i = x_i / n`.
pub fn empirical_estimate(counts: &CountVector) -> Result<Categorical> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::NoObservations);
    }
    let n = f64::from(total);
    Categorical::new(counts.as_slice().iter().map(|&c| f64::from(c) / n).collect())
}

/// `Σ_i |a_i - b_i|`.
pub fn l1_error(a: &Categorical, b: &Categorical) -> Result<f64> {
    if a.k() != b.k() {
        return Err(Error::DimensionMismatch {
            expected: a.k(),
            got: b.k(),
        });
    }
    Ok(a.probs.iter().zip(&b.probs).map(|(x, y)| (x - y).abs()).sum())
}

/// l1 distance between the empirical estimate of `counts` and `theta`,
/// evaluated as `Σ_i |x_i - n θ_i| / n`. Scaling by `n` first keeps values
/// such as `e_min(5, [0.4, 0.3, 0.3]) = 0.2` exact in double precision.
pub fn counts_l1_error(counts: &[u32], theta: &Categorical) -> Result<f64> {
    if counts.len() != theta.k() {
        return Err(Error::DimensionMismatch {
            expected: theta.k(),
            got: counts.len(),
        });
    }
    let total: u32 = counts.iter().sum();
    if total == 0 {
        return Err(Error::NoObservations);
    }
    let n = f64::from(total);
    let dev: f64 = counts
        .iter()
        .zip(theta.probs())
        .map(|(&c, &p)| (f64::from(c) - n * p).abs())
        .sum();
    Ok(dev / n)
}

/// Draws `n` i.i.d. outcomes from `dist`, reproducibly per `seed`.
pub fn sample_sequence(dist: &Categorical, n: usize, seed: Seed) -> Result<ObservationSequence> {
    sample_sequence_with(dist, n, &mut seed.rng(0))
}

pub fn sample_sequence_with<R: rand::Rng + ?Sized>(
    dist: &Categorical,
    n: usize,
    rng: &mut R,
) -> Result<ObservationSequence> {
    if n == 0 {
        return Err(Error::InvalidParameter("sequence length must be >= 1".into()));
    }
    let index = WeightedIndex::new(dist.probs())
        .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
    let values = (0..n).map(|_| index.sample(rng)).collect();
    Ok(ObservationSequence { values, k: dist.k() })
}

pub fn counts_from_sequence(seq: &ObservationSequence) -> CountVector {
    let mut counts = vec![0u32; seq.k];
    for &v in &seq.values {
        counts[v] += 1;
    }
    CountVector(counts)
}
