//! Running a teacher policy over a realized observation stream.

use std::collections::BTreeMap;

use crate::dp::Policy;
use crate::error::{Error, Result};
use crate::mdp::{apply_action, is_terminal, transitions, Action, MdpSpec, TeacherState};
use crate::observation::{Categorical, CountVector, ObservationSequence};

/// Anything that picks an action for a teacher state.
pub trait TeacherPolicy {
    fn action(&self, state: &TeacherState) -> Result<Action>;
}

impl TeacherPolicy for Policy {
    fn action(&self, state: &TeacherState) -> Result<Action> {
        Policy::action(self, state)
    }
}

/// Two-outcome threshold rule: keep `y_k` while its count is at most
/// `round(θ₀[y_k] N)` or the budget is spent, otherwise flip it.
#[derive(Debug, Clone)]
pub struct BinomialThresholdPolicy {
    theta0: Categorical,
    horizon: u32,
}

impl BinomialThresholdPolicy {
    pub fn new(theta0: Categorical, horizon: u32) -> Result<Self> {
        if theta0.k() != 2 {
            return Err(Error::BinomialOnly(theta0.k()));
        }
        Ok(Self { theta0, horizon })
    }
}

impl TeacherPolicy for BinomialThresholdPolicy {
    fn action(&self, state: &TeacherState) -> Result<Action> {
        binomial_policy_action(state, &self.theta0, self.horizon)
    }
}

/// `round` is half away from zero.
pub fn binomial_policy_action(state: &TeacherState, theta0: &Categorical, horizon: u32) -> Result<Action> {
    if theta0.k() != 2 {
        return Err(Error::BinomialOnly(theta0.k()));
    }
    if state.counts.k() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: state.counts.k(),
        });
    }
    let y = state.last_obs;
    let threshold = (theta0.prob(y) * f64::from(horizon)).round();
    if state.budget == 0 || f64::from(state.counts[y]) <= threshold {
        Ok(Action::keep(state))
    } else {
        Ok(Action::change_to(1 - y))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineTrace {
    pub original: ObservationSequence,
    pub corrected: ObservationSequence,
    pub actions: Vec<Action>,
    pub budget_spent: u32,
    pub final_counts: CountVector,
}

/// Feeds `seq` through `policy` one observation at a time. The state at
/// step `k` is built from the corrected counts so far plus the new
/// observation.
pub fn run_online<P: TeacherPolicy + ?Sized>(
    seq: &ObservationSequence,
    policy: &P,
    budget: u32,
) -> Result<OnlineTrace> {
    let k = seq.k();
    let mut counts = CountVector::zeros(k);
    let mut remaining = budget;
    let mut corrected = Vec::with_capacity(seq.len());
    let mut actions = Vec::with_capacity(seq.len());
    for &y in seq.values() {
        let mut tally = counts.into_inner();
        tally[y] += 1;
        let state = TeacherState::new(tally.into(), remaining, y)?;
        let action = policy.action(&state)?;
        let (next_counts, next_budget) = apply_action(&state, action)?;
        corrected.push(action.target);
        actions.push(action);
        counts = next_counts;
        remaining = next_budget;
    }
    Ok(OnlineTrace {
        original: seq.clone(),
        corrected: ObservationSequence::new(corrected, k)?,
        actions,
        budget_spent: budget - remaining,
        final_counts: counts,
    })
}

/// Exact expected terminal reward of following `policy` in `spec`, by
/// propagating the state distribution forward stage by stage.
pub fn expected_reward<P: TeacherPolicy + ?Sized>(spec: &MdpSpec, policy: &P) -> Result<f64> {
    let mut layer: BTreeMap<TeacherState, f64> = spec.initial_states().into_iter().collect();
    let mut total = 0.0;
    while !layer.is_empty() {
        let mut next = BTreeMap::new();
        for (state, p) in layer {
            let action = policy.action(&state)?;
            if is_terminal(&state, spec.horizon) {
                let (counts, _) = apply_action(&state, action)?;
                total += p * spec.reward.evaluate(counts.as_slice());
            } else {
                for (succ, q) in transitions(&state, action, spec)? {
                    *next.entry(succ).or_insert(0.0) += p * q;
                }
            }
        }
        layer = next;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batch::{attainable_error_from_counts, batch_correct};
    use crate::dp::solve;
    use crate::observation::{counts_l1_error, counts_from_sequence};

    fn cat(p: &[f64]) -> Categorical {
        Categorical::new(p.to_vec()).unwrap()
    }

    fn seq(values: &[usize], k: usize) -> ObservationSequence {
        ObservationSequence::new(values.to_vec(), k).unwrap()
    }

    fn all_binary(n: u32) -> impl Iterator<Item = ObservationSequence> {
        (0u32..(1 << n)).map(move |bits| {
            let values = (0..n).map(|i| ((bits >> (n - 1 - i)) & 1) as usize).collect();
            ObservationSequence::new(values, 2).unwrap()
        })
    }

    #[test]
    fn zero_budget_leaves_sequence_alone() {
        let theta = cat(&[0.4, 0.3, 0.3]);
        let spec = MdpSpec::negative_l1(&theta, 5, 0).unwrap();
        let (policy, _) = solve(&spec).unwrap();
        let s = seq(&[1, 2, 0, 2, 2], 3);
        let trace = run_online(&s, &policy, 0).unwrap();
        assert_eq!(trace.corrected, s);
        assert_eq!(trace.budget_spent, 0);
    }

    #[test]
    fn binomial_example_from_text() {
        // Seven ones in ten; the ninth observation is the one to flip.
        let fair = cat(&[0.5, 0.5]);
        let spec = MdpSpec::negative_l1(&fair, 10, 1).unwrap();
        let (policy, _) = solve(&spec).unwrap();
        let s = seq(&[1, 1, 0, 1, 1, 1, 0, 0, 1, 1], 2);
        let trace = run_online(&s, &policy, 1).unwrap();
        assert_eq!(trace.final_counts.as_slice(), &[4, 6]);
        assert_eq!(trace.corrected.values(), &[1, 1, 0, 1, 1, 1, 0, 0, 0, 1]);
        let err = counts_l1_error(trace.final_counts.as_slice(), &fair).unwrap();
        assert!((err - 0.2).abs() < 1e-12);
        assert_eq!(trace.budget_spent, 1);
    }

    #[test]
    fn multinomial_online_is_lower_bounded_by_batch() {
        let theta = cat(&[0.4, 0.3, 0.3]);
        let spec = MdpSpec::negative_l1(&theta, 5, 1).unwrap();
        let (policy, _) = solve(&spec).unwrap();
        let s = seq(&[1, 2, 0, 2, 0], 3);
        let trace = run_online(&s, &policy, 1).unwrap();
        let online = counts_l1_error(trace.final_counts.as_slice(), &theta).unwrap();
        let batch = batch_correct(&counts_from_sequence(&s), &theta, 1).unwrap();
        assert!(online >= batch.error - 1e-12);
    }

    #[test]
    fn unknown_state_is_reported() {
        let spec = MdpSpec::negative_l1(&cat(&[0.5, 0.5]), 3, 1).unwrap();
        let (policy, _) = solve(&spec).unwrap();
        let long = seq(&[0, 0, 0, 0], 2);
        assert!(matches!(run_online(&long, &policy, 1), Err(Error::UnknownState(_))));
        assert!(matches!(
            run_online(&seq(&[0, 0, 0], 2), &policy, 2),
            Err(Error::UnknownState(_))
        ));
    }

    #[test]
    fn threshold_policy_examples() {
        let fair = cat(&[0.5, 0.5]);
        let s = TeacherState::new(vec![2, 4].into(), 1, 1).unwrap();
        assert!(binomial_policy_action(&s, &fair, 10).unwrap().is_keep(&s));
        let s = TeacherState::new(vec![2, 6].into(), 1, 1).unwrap();
        assert_eq!(binomial_policy_action(&s, &fair, 10).unwrap(), Action::change_to(0));
        let s = TeacherState::new(vec![0, 9].into(), 0, 1).unwrap();
        assert!(binomial_policy_action(&s, &fair, 10).unwrap().is_keep(&s));
        let s = TeacherState::new(vec![1, 1, 1].into(), 1, 1).unwrap();
        assert!(binomial_policy_action(&s, &cat(&[0.4, 0.3, 0.3]), 10).is_err());
        // Half away from zero: 0.25 * 10 = 2.5 rounds to 3.
        let skew = cat(&[0.75, 0.25]);
        let s = TeacherState::new(vec![0, 3].into(), 1, 1).unwrap();
        assert!(binomial_policy_action(&s, &skew, 10).unwrap().is_keep(&s));
    }

    #[test]
    fn threshold_policy_reaches_attainable_error_on_every_sequence() {
        let fair = cat(&[0.5, 0.5]);
        for b in 1..=2 {
            let policy = BinomialThresholdPolicy::new(fair.clone(), 10).unwrap();
            for s in all_binary(10) {
                let trace = run_online(&s, &policy, b).unwrap();
                let online = counts_l1_error(trace.final_counts.as_slice(), &fair).unwrap();
                let original = counts_from_sequence(&s);
                let target = attainable_error_from_counts(original.as_slice(), &fair, b).unwrap();
                assert!((online - target).abs() < 1e-12, "{:?} b={b}", s.values());
                assert!(trace.budget_spent <= b);
            }
        }
    }

    #[test]
    fn dp_policy_dominates_passive_and_is_bounded_by_batch() {
        let fair = cat(&[0.5, 0.5]);
        for b in 1..=2 {
            let spec = MdpSpec::negative_l1(&fair, 10, b).unwrap();
            let (policy, _) = solve(&spec).unwrap();
            for s in all_binary(10) {
                let counts = counts_from_sequence(&s);
                let trace = run_online(&s, &policy, b).unwrap();
                let online = counts_l1_error(trace.final_counts.as_slice(), &fair).unwrap();
                let passive = counts_l1_error(counts.as_slice(), &fair).unwrap();
                let batch = batch_correct(&counts, &fair, b).unwrap();
                assert!(online <= passive + 1e-12);
                assert!(batch.error <= online + 1e-12);
                let changed = s
                    .values()
                    .iter()
                    .zip(trace.corrected.values())
                    .filter(|(a, c)| a != c)
                    .count() as u32;
                assert_eq!(changed, trace.budget_spent);
            }
        }
    }

    #[test]
    fn expected_reward_of_dp_policy_is_root_value() {
        let theta = cat(&[0.4, 0.3, 0.3]);
        let spec = MdpSpec::negative_l1(&theta, 6, 2).unwrap();
        let (policy, values) = solve(&spec).unwrap();
        let root = values.root_value(&spec).unwrap();
        assert!((expected_reward(&spec, &policy).unwrap() - root).abs() < 1e-12);
    }
}
