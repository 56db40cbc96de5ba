//! Seeded experiment runners. Trial `t` of every runner draws its data from
//! stream `t` of the seed, so the same trial sees the same observations
//! across budgets and horizons.

use crate::batch::{attainable_error_from_counts, batch_correct};
use crate::bounds::{monte_carlo_report, BoundReport};
use crate::dp::{solve_with, SolverOptions};
use crate::error::{Error, Result};
use crate::likelihood::{misclassification_experiment, BioExperiment, MisclassificationRate};
use crate::mdp::MdpSpec;
use crate::observation::{
    counts_from_sequence, counts_l1_error, sample_sequence_with, Categorical, Seed,
};
use crate::teacher::run_online;

/// Slack allowed when checking `error_batch <= error_online`.
const EMIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub seed: u64,
    pub trial: u64,
    pub horizon: u32,
    pub budget: u32,
    pub error_original: f64,
    pub error_online: f64,
    pub error_batch: f64,
    /// Closed-form per-sequence optimum; two-outcome runs only.
    pub error_attainable: Option<f64>,
    pub budget_spent: u32,
}

#[derive(Debug, Clone)]
pub struct TrialGrid {
    pub theta0: Categorical,
    pub horizons: Vec<u32>,
    pub budgets: Vec<u32>,
    pub trials: u64,
    pub seed: Seed,
    pub solver: SolverOptions,
}

impl TrialGrid {
    pub fn new(theta0: Categorical, horizon: u32, budget: u32, trials: u64, seed: Seed) -> Self {
        Self {
            theta0,
            horizons: vec![horizon],
            budgets: vec![budget],
            trials,
            seed,
            solver: SolverOptions::default(),
        }
    }
}

/// Original, online-corrected, and batch-corrected errors for every trial
/// and grid point.
pub fn run_multinomial(grid: &TrialGrid) -> Result<Vec<ExperimentRecord>> {
    run_trials("multinomial", grid, false)
}

/// As [`run_multinomial`], plus the closed-form attainable error. Requires
/// two outcomes.
pub fn run_binomial(grid: &TrialGrid) -> Result<Vec<ExperimentRecord>> {
    if grid.theta0.k() != 2 {
        return Err(Error::BinomialOnly(grid.theta0.k()));
    }
    run_trials("binomial", grid, true)
}

fn run_trials(name: &str, grid: &TrialGrid, attainable: bool) -> Result<Vec<ExperimentRecord>> {
    let theta0 = &grid.theta0;
    let mut records = Vec::new();
    for &horizon in &grid.horizons {
        for &budget in &grid.budgets {
            let spec = MdpSpec::negative_l1(theta0, horizon, budget)?;
            let (policy, _) = solve_with(&spec, grid.solver)?;
            for trial in 0..grid.trials {
                let seq = sample_sequence_with(theta0, horizon as usize, &mut grid.seed.rng(trial))?;
                let counts = counts_from_sequence(&seq);
                let trace = run_online(&seq, &policy, budget)?;
                let error_online = counts_l1_error(trace.final_counts.as_slice(), theta0)?;
                let batch = batch_correct(&counts, theta0, budget)?;
                if batch.error > error_online + EMIT_TOLERANCE {
                    return Err(Error::InvariantViolation(format!(
                        "trial {trial}: batch error {} exceeds online error {error_online}",
                        batch.error
                    )));
                }
                records.push(ExperimentRecord {
                    experiment: name.to_string(),
                    seed: grid.seed.0,
                    trial,
                    horizon,
                    budget,
                    error_original: counts_l1_error(counts.as_slice(), theta0)?,
                    error_online,
                    error_batch: batch.error,
                    error_attainable: if attainable {
                        Some(attainable_error_from_counts(counts.as_slice(), theta0, budget)?)
                    } else {
                        None
                    },
                    budget_spent: trace.budget_spent,
                });
            }
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceRow {
    pub horizon: u32,
    pub budget: u32,
    pub trials: u64,
    /// Mean of the corrected estimate's first coordinate.
    pub mean: f64,
    /// Sample variance of the corrected estimate's first coordinate.
    pub variance: f64,
    pub std_error: f64,
}

/// Spread of the online-corrected estimate of outcome 0 for every
/// `(horizon, budget)` grid point.
pub fn run_variance_sweep(grid: &TrialGrid) -> Result<Vec<VarianceRow>> {
    let theta0 = &grid.theta0;
    let mut rows = Vec::new();
    for &horizon in &grid.horizons {
        let sequences = (0..grid.trials)
            .map(|t| sample_sequence_with(theta0, horizon as usize, &mut grid.seed.rng(t)))
            .collect::<Result<Vec<_>>>()?;
        for &budget in &grid.budgets {
            let spec = MdpSpec::negative_l1(theta0, horizon, budget)?;
            let (policy, _) = solve_with(&spec, grid.solver)?;
            let first = sequences
                .iter()
                .map(|seq| {
                    let trace = run_online(seq, &policy, budget)?;
                    Ok(f64::from(trace.final_counts[0]) / f64::from(horizon))
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean = first.iter().sum::<f64>() / first.len().max(1) as f64;
            let (variance, std_error) = crate::bounds::variance_with_std_error(&first);
            rows.push(VarianceRow {
                horizon,
                budget,
                trials: grid.trials,
                mean,
                variance,
                std_error,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct BoundsGrid {
    pub horizons: Vec<u64>,
    pub ranges: Vec<u64>,
    pub budgets: Vec<u64>,
    pub trials: u64,
    pub seed: Seed,
}

/// One Monte-Carlo report per `(N, M, B)`; rows are ordered by `N`, then
/// `M`, then `B`.
pub fn run_bounds(grid: &BoundsGrid) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    for &n in &grid.horizons {
        for &m in &grid.ranges {
            for &b in &grid.budgets {
                if b > n * m {
                    return Err(Error::InvalidParameter(format!(
                        "budget {b} exceeds N*M = {}",
                        n * m
                    )));
                }
                out.push(monte_carlo_report(n, m, b, grid.trials, grid.seed)?);
            }
        }
    }
    Ok(out)
}

/// Misclassification rate for every `(horizon, budget)` point.
pub fn run_bio(base: &BioExperiment, horizons: &[u32]) -> Result<Vec<MisclassificationRate>> {
    let mut out = Vec::new();
    for &horizon in horizons {
        let exp = BioExperiment {
            horizon,
            ..base.clone()
        };
        out.extend(misclassification_experiment(&exp)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat(p: &[f64]) -> Categorical {
        Categorical::new(p.to_vec()).unwrap()
    }

    #[test]
    fn multinomial_defaults() {
        let theta = cat(&[0.4, 0.3, 0.3]);

        let zero = run_multinomial(&TrialGrid::new(theta.clone(), 5, 0, 50, Seed(1))).unwrap();
        assert!(zero.iter().all(|r| r.error_online == r.error_original));

        let one = run_multinomial(&TrialGrid::new(theta.clone(), 5, 1, 50, Seed(1))).unwrap();
        let mean = |f: fn(&ExperimentRecord) -> f64| one.iter().map(f).sum::<f64>() / 50.0;
        assert!(mean(|r| r.error_online) <= mean(|r| r.error_original));
        assert!(one.iter().all(|r| r.error_attainable.is_none()));

        let full = run_multinomial(&TrialGrid::new(theta, 5, 5, 50, Seed(1))).unwrap();
        assert!(full.iter().all(|r| r.error_online == 0.2));
    }

    #[test]
    fn binomial_records() {
        let fair = cat(&[0.5, 0.5]);
        let records = run_binomial(&TrialGrid::new(fair.clone(), 10, 1, 50, Seed(4))).unwrap();
        for r in &records {
            let a = r.error_attainable.unwrap();
            assert!((r.error_online - a).abs() < 1e-12);
            assert!(r.error_online <= r.error_original + 1e-12);
        }
        let zero = run_binomial(&TrialGrid::new(fair, 10, 0, 50, Seed(4))).unwrap();
        for r in &zero {
            assert_eq!(r.error_online, r.error_original);
            assert_eq!(r.error_batch, r.error_original);
            assert!((r.error_attainable.unwrap() - r.error_original).abs() < 1e-12);
        }
        assert!(run_binomial(&TrialGrid::new(cat(&[0.4, 0.3, 0.3]), 5, 1, 5, Seed(0))).is_err());
    }

    #[test]
    fn passive_variance_matches_binomial_formula() {
        let theta = cat(&[0.3, 0.7]);
        let grid = TrialGrid {
            theta0: theta,
            horizons: vec![10, 20],
            budgets: vec![0],
            trials: 20_000,
            seed: Seed(12),
            solver: SolverOptions::default(),
        };
        for row in run_variance_sweep(&grid).unwrap() {
            let expected = 0.3 * 0.7 / f64::from(row.horizon);
            assert!(
                (row.variance - expected).abs() < 3.0 * row.std_error,
                "N={} var={} expected={expected}",
                row.horizon,
                row.variance
            );
        }
    }

    #[test]
    fn sweep_matches_exact_moments() {
        use crate::dp::solve;
        use crate::mdp::TerminalReward;
        use crate::teacher::expected_reward;

        let theta = cat(&[0.4, 0.3, 0.3]);
        let grid = TrialGrid {
            theta0: theta.clone(),
            horizons: vec![5, 10],
            budgets: vec![0, 1, 2],
            trials: 4000,
            seed: Seed(21),
            solver: SolverOptions::default(),
        };
        for row in run_variance_sweep(&grid).unwrap() {
            let (n, b) = (row.horizon, row.budget);
            let spec = MdpSpec::negative_l1(&theta, n, b).unwrap();
            let (policy, _) = solve(&spec).unwrap();
            let moment = |power: i32| {
                let reward = TerminalReward::new("moment", move |c| (f64::from(c[0]) / f64::from(n)).powi(power));
                let s = MdpSpec::new(n, b, theta.clone(), reward).unwrap();
                expected_reward(&s, &policy).unwrap()
            };
            let exact = moment(2) - moment(1).powi(2);
            if b == 0 {
                assert!((exact - 0.4 * 0.6 / f64::from(n)).abs() < 1e-12);
            }
            assert!(
                (row.variance - exact).abs() < 3.0 * row.std_error,
                "N={n} b={b} sampled {} exact {exact}",
                row.variance
            );
        }
    }

    #[test]
    fn bounds_grid_rejects_oversized_budget() {
        let grid = BoundsGrid {
            horizons: vec![2],
            ranges: vec![1],
            budgets: vec![3],
            trials: 1000,
            seed: Seed(0),
        };
        assert!(run_bounds(&grid).is_err());
    }
}
