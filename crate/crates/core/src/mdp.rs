//! The online correction problem as a finite-horizon MDP.
//!
//! A state is `(x, b_k, y_k)`: counts of the (corrected) observations seen so
//! far including the current one, the remaining budget, and the current
//! observation. The teacher either keeps `y_k` or changes it to another
//! value at the cost of one budget unit; the next observation is then drawn
//! from the teacher's model and tallied. Reward is paid only once all `N`
//! observations have been received and the last one has been acted on.

use std::fmt;
use std::sync::Arc;

use crate::combinatorics::multiset_coefficient;
use crate::error::{Error, Result};
use crate::observation::{counts_l1_error, Categorical, CountVector};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TeacherState {
    pub counts: CountVector,
    pub budget: u32,
    pub last_obs: usize,
}

impl TeacherState {
    pub fn new(counts: CountVector, budget: u32, last_obs: usize) -> Result<Self> {
        if last_obs >= counts.k() {
            return Err(Error::OutcomeOutOfRange {
                value: last_obs,
                k: counts.k(),
            });
        }
        if counts[last_obs] == 0 {
            return Err(Error::InvalidParameter(format!(
                "current observation {last_obs} is not tallied in counts [{counts}]"
            )));
        }
        Ok(Self {
            counts,
            budget,
            last_obs,
        })
    }

    /// Number of observations received so far.
    pub fn stage(&self) -> u32 {
        self.counts.total()
    }
}

impl fmt::Display for TeacherState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(x=[{}], b={}, y={})",
            self.counts, self.budget, self.last_obs
        )
    }
}

/// Set the current observation to `target`. `target == last_obs` is "keep".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub target: usize,
}

impl Action {
    pub fn keep(state: &TeacherState) -> Self {
        Self {
            target: state.last_obs,
        }
    }

    pub fn change_to(target: usize) -> Self {
        Self { target }
    }

    pub fn is_keep(&self, state: &TeacherState) -> bool {
        self.target == state.last_obs
    }
}

type RewardFn = dyn Fn(&[u32]) -> f64 + Send + Sync;

/// Episode-end score as a function of the final corrected counts.
#[derive(Clone)]
pub struct TerminalReward {
    name: String,
    eval: Arc<RewardFn>,
}

impl TerminalReward {
    pub fn new(name: impl Into<String>, eval: impl Fn(&[u32]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    /// `-||θ̃_N - θ₀||₁`.
    pub fn negative_l1(theta0: Categorical) -> Self {
        let name = format!("-l1 to {theta0}");
        Self::new(name, move |counts| {
            -counts_l1_error(counts, &theta0).expect("final counts match the reward dimension")
        })
    }

    pub fn evaluate(&self, counts: &[u32]) -> f64 {
        (self.eval)(counts)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for TerminalReward {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("TerminalReward").field(&self.name).finish()
    }
}

#[derive(Debug, Clone)]
pub struct MdpSpec {
    pub horizon: u32,
    pub budget: u32,
    /// Distribution the teacher assumes for upcoming observations.
    pub model: Categorical,
    pub reward: TerminalReward,
}

impl MdpSpec {
    pub fn new(horizon: u32, budget: u32, model: Categorical, reward: TerminalReward) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        Ok(Self {
            horizon,
            budget,
            model,
            reward,
        })
    }

    /// Teacher that knows `θ₀` and is scored by `-l1` to it.
    pub fn negative_l1(theta0: &Categorical, horizon: u32, budget: u32) -> Result<Self> {
        Self::new(
            horizon,
            budget,
            theta0.clone(),
            TerminalReward::negative_l1(theta0.clone()),
        )
    }

    pub fn k(&self) -> usize {
        self.model.k()
    }

    /// States after the first observation, with their probabilities.
    pub fn initial_states(&self) -> Vec<(TeacherState, f64)> {
        let k = self.k();
        (0..k)
            .filter(|&y| self.model.prob(y) > 0.0)
            .map(|y| {
                let mut counts = vec![0; k];
                counts[y] = 1;
                let state = TeacherState {
                    counts: counts.into(),
                    budget: self.budget,
                    last_obs: y,
                };
                (state, self.model.prob(y))
            })
            .collect()
    }

    /// Feasible actions in preference order: keep first, then changes by
    /// ascending target.
    pub fn feasible_actions(&self, state: &TeacherState) -> Vec<Action> {
        let mut actions = vec![Action::keep(state)];
        if state.budget > 0 {
            actions.extend(
                (0..self.k())
                    .filter(|&v| v != state.last_obs)
                    .map(Action::change_to),
            );
        }
        actions
    }
}

/// Number of count vectors with `1 <= Σx <= n` over `k` outcomes,
/// `Σ_{m=1}^{n} C(k + m - 1, m)`.
pub fn state_count_bound(k: u32, n: u32) -> Result<u128> {
    (1..=u64::from(n)).try_fold(0u128, |acc, m| {
        acc.checked_add(multiset_coefficient(u64::from(k), m)?)
            .ok_or(Error::Overflow("state count bound"))
    })
}

/// [`state_count_bound`] times the `(b + 1)` budget levels and `k` current
/// observations.
pub fn full_state_bound(k: u32, n: u32, b: u32) -> Result<u128> {
    state_count_bound(k, n)?
        .checked_mul(u128::from(b) + 1)
        .and_then(|v| v.checked_mul(u128::from(k)))
        .ok_or(Error::Overflow("state count bound"))
}

pub fn is_terminal(state: &TeacherState, horizon: u32) -> bool {
    state.counts.total() == horizon
}

/// Counts and budget after acting on the current observation.
pub fn apply_action(state: &TeacherState, action: Action) -> Result<(CountVector, u32)> {
    let k = state.counts.k();
    if action.target >= k {
        return Err(Error::OutcomeOutOfRange {
            value: action.target,
            k,
        });
    }
    if action.is_keep(state) {
        return Ok((state.counts.clone(), state.budget));
    }
    if state.budget == 0 {
        return Err(Error::BudgetExhausted);
    }
    let mut counts = state.counts.clone().into_inner();
    counts[state.last_obs] -= 1;
    counts[action.target] += 1;
    Ok((counts.into(), state.budget - 1))
}

/// Successor states and probabilities: act, then tally the next observation.
pub fn transitions(state: &TeacherState, action: Action, spec: &MdpSpec) -> Result<Vec<(TeacherState, f64)>> {
    if state.counts.total() >= spec.horizon {
        return Err(Error::HorizonReached(spec.horizon));
    }
    let (counts, budget) = apply_action(state, action)?;
    let base = counts.into_inner();
    Ok((0..spec.k())
        .filter(|&v| spec.model.prob(v) > 0.0)
        .map(|v| {
            let mut next = base.clone();
            next[v] += 1;
            let succ = TeacherState {
                counts: next.into(),
                budget,
                last_obs: v,
            };
            (succ, spec.model.prob(v))
        })
        .collect())
}

/// Reward for taking `action` on the final observation.
pub fn terminal_value(state: &TeacherState, action: Action, spec: &MdpSpec) -> Result<f64> {
    if !is_terminal(state, spec.horizon) {
        return Err(Error::InvalidParameter(format!(
            "state {state} is not at the horizon {}",
            spec.horizon
        )));
    }
    let (counts, _) = apply_action(state, action)?;
    Ok(spec.reward.evaluate(counts.as_slice()))
}
