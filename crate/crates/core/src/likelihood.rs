//! Parameter identification from action histories.
//!
//! The student observes actions drawn from `p(a | θ)` for an unknown `θ` in a
//! finite candidate set and reports the maximum-likelihood candidate. The
//! likelihood of an i.i.d. history depends only on its action counts, so the
//! teacher MDP is reused with a likelihood-based terminal reward.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dp::{solve_with, SolverOptions};
use crate::error::{Error, Result};
use crate::mdp::{MdpSpec, TerminalReward};
use crate::observation::{sample_sequence_with, Categorical, CountVector, Seed};
use crate::teacher::run_online;

const DEFAULT_CANDIDATES: &str = include_str!("../data/time_perception_candidates.toml");
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateModel {
    pub theta: i64,
    pub action_dist: Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    models: Vec<CandidateModel>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CandidateFile {
    version: u32,
    model: Vec<ModelRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelRecord {
    theta: i64,
    probs: Vec<f64>,
}

impl CandidateSet {
    pub fn new(models: Vec<CandidateModel>) -> Result<Self> {
        if models.len() < 2 {
            return Err(Error::InvalidCandidates(format!(
                "need at least 2 models, got {}",
                models.len()
            )));
        }
        let k = models[0].action_dist.k();
        if let Some(m) = models.iter().find(|m| m.action_dist.k() != k) {
            return Err(Error::InvalidCandidates(format!(
                "model {} has {} actions, expected {k}",
                m.theta,
                m.action_dist.k()
            )));
        }
        let mut labels: Vec<i64> = models.iter().map(|m| m.theta).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidCandidates("duplicate theta labels".into()));
        }
        Ok(Self { models })
    }

    /// The three time-perception models shipped in
    /// `data/time_perception_candidates.toml`.
    pub fn time_perception() -> Self {
        Self::from_toml_str(DEFAULT_CANDIDATES).expect("bundled candidate file is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: CandidateFile =
            toml::from_str(text).map_err(|e| Error::InvalidCandidates(e.to_string()))?;
        if file.version != FORMAT_VERSION {
            return Err(Error::InvalidCandidates(format!(
                "unsupported version {}, expected {FORMAT_VERSION}",
                file.version
            )));
        }
        let models = file
            .model
            .into_iter()
            .map(|r| {
                Ok(CandidateModel {
                    theta: r.theta,
                    action_dist: Categorical::new(r.probs)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(models)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidCandidates(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let file = CandidateFile {
            version: FORMAT_VERSION,
            model: self
                .models
                .iter()
                .map(|m| ModelRecord {
                    theta: m.theta,
                    probs: m.action_dist.probs().to_vec(),
                })
                .collect(),
        };
        toml::to_string(&file).expect("candidate records serialize")
    }

    pub fn models(&self) -> &[CandidateModel] {
        &self.models
    }

    pub fn action_count(&self) -> usize {
        self.models[0].action_dist.k()
    }

    pub fn get(&self, theta: i64) -> Result<&CandidateModel> {
        self.models
            .iter()
            .find(|m| m.theta == theta)
            .ok_or(Error::UnknownLabel(theta))
    }
}

/// `-Σ_a x_a ln p(a | θ)`; `+∞` when an observed action has zero probability.
pub fn negative_log_likelihood(counts: &CountVector, model: &CandidateModel) -> Result<f64> {
    if counts.k() != model.action_dist.k() {
        return Err(Error::DimensionMismatch {
            expected: model.action_dist.k(),
            got: counts.k(),
        });
    }
    Ok(counts
        .as_slice()
        .iter()
        .zip(model.action_dist.probs())
        .filter(|(&c, _)| c > 0)
        .map(|(&c, &p)| -f64::from(c) * p.ln())
        .sum())
}

/// Candidate with the smallest negative log-likelihood; ties go to the
/// smallest label.
pub fn ml_estimate(counts: &CountVector, candidates: &CandidateSet) -> Result<i64> {
    if counts.total() == 0 {
        return Err(Error::NoObservations);
    }
    let mut best: Option<(f64, i64)> = None;
    for m in candidates.models() {
        let nll = negative_log_likelihood(counts, m)?;
        if !nll.is_finite() {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, label)) => nll < b || (nll == b && m.theta < label),
        };
        if better {
            best = Some((nll, m.theta));
        }
    }
    best.map(|(_, theta)| theta).ok_or(Error::ImpossibleHistory)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BioReward {
    /// `-|θ̃ - θ₀|`.
    #[default]
    AbsoluteDifference,
    /// `-1` when `θ̃ ≠ θ₀`, else `0`.
    Indicator,
}

/// Terminal reward scoring the student's ML estimate on the final counts
/// against `theta0`. Histories no candidate can explain get the worst
/// score the reward can take.
pub fn bio_terminal_reward(theta0: i64, candidates: &CandidateSet, kind: BioReward) -> Result<TerminalReward> {
    candidates.get(theta0)?;
    let candidates = candidates.clone();
    let worst = candidates
        .models()
        .iter()
        .map(|m| (m.theta - theta0).unsigned_abs())
        .max()
        .unwrap_or(0) as f64;
    let name = format!("ml-estimate vs theta {theta0} ({kind:?})");
    Ok(TerminalReward::new(name, move |counts| {
        match ml_estimate(&counts.to_vec().into(), &candidates) {
            Ok(est) => match kind {
                BioReward::AbsoluteDifference => -((est - theta0).unsigned_abs() as f64),
                BioReward::Indicator => -f64::from(u8::from(est != theta0)),
            },
            Err(_) => match kind {
                BioReward::AbsoluteDifference => -worst,
                BioReward::Indicator => -1.0,
            },
        }
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MisclassificationRate {
    pub horizon: u32,
    pub budget: u32,
    pub trials: u64,
    pub misclassified: u64,
    pub rate: f64,
}

#[derive(Debug, Clone)]
pub struct BioExperiment {
    pub theta0: i64,
    pub candidates: CandidateSet,
    pub reward: BioReward,
    pub horizon: u32,
    pub budgets: Vec<u32>,
    pub trials: u64,
    pub seed: Seed,
    pub solver: SolverOptions,
}

/// For each budget, the fraction of trials in which the student's estimate
/// from the teacher-corrected history differs from `theta0`. Trial `t`
/// uses the same sampled history for every budget.
pub fn misclassification_experiment(exp: &BioExperiment) -> Result<Vec<MisclassificationRate>> {
    let truth = exp.candidates.get(exp.theta0)?.action_dist.clone();
    let reward = bio_terminal_reward(exp.theta0, &exp.candidates, exp.reward)?;
    let histories = (0..exp.trials)
        .map(|t| sample_sequence_with(&truth, exp.horizon as usize, &mut exp.seed.rng(t)))
        .collect::<Result<Vec<_>>>()?;
    exp.budgets
        .iter()
        .map(|&budget| {
            let spec = MdpSpec::new(exp.horizon, budget, truth.clone(), reward.clone())?;
            let (policy, _) = solve_with(&spec, exp.solver)?;
            let mut misclassified = 0u64;
            for history in &histories {
                let trace = run_online(history, &policy, budget)?;
                if ml_estimate(&trace.final_counts, &exp.candidates)? != exp.theta0 {
                    misclassified += 1;
                }
            }
            Ok(MisclassificationRate {
                horizon: exp.horizon,
                budget,
                trials: exp.trials,
                misclassified,
                rate: misclassified as f64 / exp.trials as f64,
            })
        })
        .collect()
}

/// `-E|θ̂ - θ₀|` for an uncorrected history of `n` draws, by enumerating all
/// count vectors with their multinomial probabilities.
pub fn passive_expected_reward(theta0: i64, candidates: &CandidateSet, n: u32, kind: BioReward) -> Result<f64> {
    let truth = &candidates.get(theta0)?.action_dist;
    let reward = bio_terminal_reward(theta0, candidates, kind)?;
    let mut total = 0.0;
    for counts in crate::combinatorics::Compositions::new(n, truth.k()) {
        total += multinomial_pmf(&counts, truth) * reward.evaluate(&counts);
    }
    Ok(total)
}

fn multinomial_pmf(counts: &[u32], dist: &Categorical) -> f64 {
    let n: u32 = counts.iter().sum();
    let ln_fact = |k: u32| (1..=k).map(|i| f64::from(i).ln()).sum::<f64>();
    let mut log_p = ln_fact(n);
    for (&c, &p) in counts.iter().zip(dist.probs()) {
        if c > 0 {
            if p == 0.0 {
                return 0.0;
            }
            log_p += f64::from(c) * p.ln() - ln_fact(c);
        }
    }
    log_p.exp()
}
