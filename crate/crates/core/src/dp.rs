//! Exact backward induction over the reachable part of the teacher MDP.
//!
//! Tables are indexed by stage (number of observations received). States at
//! stage `k` only lead to stage `k + 1`, so the forward reachability pass
//! keeps one frontier and the backward pass reads only the next stage.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mdp::{apply_action, full_state_bound, transitions, Action, MdpSpec, TeacherState};

/// Default cap on `full_state_bound(K, N, b)` accepted by [`solve`].
pub const DEFAULT_STATE_CEILING: u128 = 50_000_000;

/// Default cap on `K^N (K+1)^N` accepted by [`brute_force_value`].
pub const DEFAULT_BRUTE_FORCE_CEILING: u128 = 100_000_000;

/// Action values within this distance of the best are ties; ties resolve to
/// keep, then to the smallest target.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub state_ceiling: u128,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            state_ceiling: DEFAULT_STATE_CEILING,
        }
    }
}

/// Optimal action for every reachable state, per stage.
#[derive(Debug, Clone)]
pub struct Policy {
    horizon: u32,
    budget: u32,
    k: usize,
    stages: Vec<HashMap<TeacherState, Action>>,
}

impl Policy {
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn action(&self, state: &TeacherState) -> Result<Action> {
        let stage = state.stage();
        (1..=self.horizon)
            .contains(&stage)
            .then(|| self.stages[(stage - 1) as usize].get(state))
            .flatten()
            .copied()
            .ok_or_else(|| Error::UnknownState(state.to_string()))
    }

    /// Total number of stored states.
    pub fn len(&self) -> usize {
        self.stages.iter().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TeacherState, &Action)> {
        self.stages.iter().flat_map(|s| s.iter())
    }

    /// One line per state, `stage,counts,budget,last_obs,action`, sorted by
    /// stage, counts, budget, then last observation. Counts are
    /// space-separated; actions are `keep` or `change:<v>`.
    pub fn dump(&self) -> String {
        let mut rows: Vec<(&TeacherState, &Action)> = self.iter().collect();
        rows.sort_by(|a, b| {
            (a.0.stage(), &a.0.counts, a.0.budget, a.0.last_obs)
                .cmp(&(b.0.stage(), &b.0.counts, b.0.budget, b.0.last_obs))
        });
        let mut out = String::from("stage,counts,budget,last_obs,action\n");
        for (s, a) in rows {
            let action = if a.is_keep(s) {
                "keep".to_string()
            } else {
                format!("change:{}", a.target)
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                s.stage(),
                s.counts,
                s.budget,
                s.last_obs,
                action
            );
        }
        out
    }
}

/// Optimal expected terminal reward from every reachable state.
#[derive(Debug, Clone)]
pub struct ValueTable {
    stages: Vec<HashMap<TeacherState, f64>>,
}

impl ValueTable {
    pub fn value_at(&self, state: &TeacherState) -> Result<f64> {
        let stage = state.stage() as usize;
        (1..=self.stages.len())
            .contains(&stage)
            .then(|| self.stages[stage - 1].get(state))
            .flatten()
            .copied()
            .ok_or_else(|| Error::UnknownState(state.to_string()))
    }

    /// Expected value before the first observation arrives.
    pub fn root_value(&self, spec: &MdpSpec) -> Result<f64> {
        spec.initial_states()
            .iter()
            .map(|(s, p)| self.value_at(s).map(|v| p * v))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.stages.iter().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TeacherState, &f64)> {
        self.stages.iter().flat_map(|s| s.iter())
    }
}

pub fn value_at(table: &ValueTable, state: &TeacherState) -> Result<f64> {
    table.value_at(state)
}

/// One-step lookahead value of `action` given the next stage's values.
pub fn backup(
    state: &TeacherState,
    action: Action,
    spec: &MdpSpec,
    next: Option<&HashMap<TeacherState, f64>>,
) -> Result<f64> {
    match next {
        None => {
            let (counts, _) = apply_action(state, action)?;
            Ok(spec.reward.evaluate(counts.as_slice()))
        }
        Some(values) => transitions(state, action, spec)?
            .iter()
            .map(|(succ, p)| {
                values
                    .get(succ)
                    .map(|v| p * v)
                    .ok_or_else(|| Error::UnknownState(succ.to_string()))
            })
            .sum(),
    }
}

pub fn solve(spec: &MdpSpec) -> Result<(Policy, ValueTable)> {
    solve_with(spec, SolverOptions::default())
}

pub fn solve_with(spec: &MdpSpec, options: SolverOptions) -> Result<(Policy, ValueTable)> {
    let bound = full_state_bound(spec.k() as u32, spec.horizon, spec.budget)?;
    if bound > options.state_ceiling {
        return Err(Error::StateSpaceTooLarge {
            bound,
            ceiling: options.state_ceiling,
        });
    }

    let mut layers: Vec<Vec<TeacherState>> = Vec::with_capacity(spec.horizon as usize);
    layers.push(spec.initial_states().into_iter().map(|(s, _)| s).collect());
    for _ in 1..spec.horizon {
        let mut next = HashSet::new();
        for s in layers.last().expect("non-empty") {
            for a in spec.feasible_actions(s) {
                for (succ, _) in transitions(s, a, spec)? {
                    next.insert(succ);
                }
            }
        }
        layers.push(next.into_iter().collect());
    }

    let n = layers.len();
    let mut values: Vec<HashMap<TeacherState, f64>> = vec![HashMap::new(); n];
    let mut actions: Vec<HashMap<TeacherState, Action>> = vec![HashMap::new(); n];
    for stage in (0..n).rev() {
        let (head, tail) = values.split_at_mut(stage + 1);
        let next = tail.first();
        let layer = std::mem::take(&mut layers[stage]);
        let mut stage_values = HashMap::with_capacity(layer.len());
        let mut stage_actions = HashMap::with_capacity(layer.len());
        for s in layer {
            let (value, action) = best_action(&s, spec, next)?;
            stage_values.insert(s.clone(), value);
            stage_actions.insert(s, action);
        }
        head[stage] = stage_values;
        actions[stage] = stage_actions;
    }

    Ok((
        Policy {
            horizon: spec.horizon,
            budget: spec.budget,
            k: spec.k(),
            stages: actions,
        },
        ValueTable { stages: values },
    ))
}

fn best_action(
    state: &TeacherState,
    spec: &MdpSpec,
    next: Option<&HashMap<TeacherState, f64>>,
) -> Result<(f64, Action)> {
    let candidates = spec
        .feasible_actions(state)
        .into_iter()
        .map(|a| backup(state, a, spec, next).map(|q| (a, q)))
        .collect::<Result<Vec<_>>>()?;
    let best = candidates
        .iter()
        .map(|(_, q)| *q)
        .fold(f64::NEG_INFINITY, f64::max);
    let (action, _) = candidates
        .iter()
        .find(|(_, q)| *q >= best - TIE_TOLERANCE)
        .expect("keep is always feasible");
    Ok((best, *action))
}

/// Optimal expected reward by plain recursion over every observation
/// sequence and every feasible correction, with no state sharing. Used to
/// check [`solve`].
pub fn brute_force_value(spec: &MdpSpec) -> Result<f64> {
    brute_force_value_with(spec, DEFAULT_BRUTE_FORCE_CEILING)
}

pub fn brute_force_value_with(spec: &MdpSpec, ceiling: u128) -> Result<f64> {
    let k = spec.k() as u128;
    let work = (k * (k + 1))
        .checked_pow(spec.horizon)
        .ok_or(Error::Overflow("brute force work estimate"))?;
    if work > ceiling {
        return Err(Error::StateSpaceTooLarge {
            bound: work,
            ceiling,
        });
    }
    let mut tally = vec![0u32; spec.k()];
    Ok(expect_next(spec, &mut tally, 0, spec.budget))
}

fn expect_next(spec: &MdpSpec, tally: &mut [u32], received: u32, budget: u32) -> f64 {
    let mut total = 0.0;
    for (y, &p) in spec.model.probs().iter().enumerate() {
        if p > 0.0 {
            total += p * decide(spec, tally, y, received + 1, budget);
        }
    }
    total
}

fn decide(spec: &MdpSpec, tally: &mut [u32], observed: usize, received: u32, budget: u32) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for emitted in 0..tally.len() {
        let cost = u32::from(emitted != observed);
        if cost > budget {
            continue;
        }
        tally[emitted] += 1;
        let v = if received == spec.horizon {
            spec.reward.evaluate(tally)
        } else {
            expect_next(spec, tally, received, budget - cost)
        };
        tally[emitted] -= 1;
        best = best.max(v);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::Compositions;
    use crate::mdp::is_terminal;
    use crate::observation::{counts_l1_error, Categorical, Seed};
    use rand::seq::IndexedRandom;

    fn cat(p: &[f64]) -> Categorical {
        Categorical::new(p.to_vec()).unwrap()
    }

    fn root(spec: &MdpSpec) -> f64 {
        let (_, values) = solve(spec).unwrap();
        values.root_value(spec).unwrap()
    }

    #[test]
    fn solve_examples() {
        let fair = cat(&[0.5, 0.5]);
        assert_eq!(root(&MdpSpec::negative_l1(&fair, 1, 0).unwrap()), -1.0);
        assert_eq!(root(&MdpSpec::negative_l1(&fair, 1, 1).unwrap()), -1.0);
        assert_eq!(root(&MdpSpec::negative_l1(&fair, 2, 1).unwrap()), 0.0);
    }

    #[test]
    fn brute_force_examples() {
        let fair = cat(&[0.5, 0.5]);
        assert_eq!(brute_force_value(&MdpSpec::negative_l1(&fair, 2, 1).unwrap()).unwrap(), 0.0);
        // 00 and 11 score -1 each, 01 and 10 score 0.
        assert_eq!(brute_force_value(&MdpSpec::negative_l1(&fair, 2, 0).unwrap()).unwrap(), -0.5);

        let third = 1.0 / 3.0;
        let uniform = cat(&[third, third, third]);
        let spec = MdpSpec::negative_l1(&uniform, 3, 0).unwrap();
        let mut direct = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let mut counts = [0u32; 3];
                    counts[a] += 1;
                    counts[b] += 1;
                    counts[c] += 1;
                    direct -= counts_l1_error(&counts, &uniform).unwrap() / 27.0;
                }
            }
        }
        let bf = brute_force_value(&spec).unwrap();
        assert!((bf - direct).abs() < 1e-12, "{bf} vs {direct}");
        assert!((root(&spec) - direct).abs() < 1e-12);

        assert!(matches!(
            brute_force_value(&MdpSpec::negative_l1(&uniform, 20, 1).unwrap()),
            Err(Error::StateSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn ceiling_is_enforced() {
        let spec = MdpSpec::negative_l1(&cat(&[0.4, 0.3, 0.3]), 30, 3).unwrap();
        let err = solve_with(&spec, SolverOptions { state_ceiling: 1000 }).unwrap_err();
        assert!(matches!(err, Error::StateSpaceTooLarge { ceiling: 1000, .. }));
    }

    #[test]
    fn value_at_examples() {
        let theta = cat(&[0.4, 0.3, 0.3]);
        let spec = MdpSpec::negative_l1(&theta, 4, 1).unwrap();
        let (_, values) = solve(&spec).unwrap();

        let terminal = TeacherState::new(vec![3, 1, 0].into(), 1, 0).unwrap();
        let best = spec
            .feasible_actions(&terminal)
            .into_iter()
            .map(|a| crate::mdp::terminal_value(&terminal, a, &spec).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(values.value_at(&terminal).unwrap(), best);

        // With no budget left the value is the passive expected error over
        // the remaining two draws.
        let s = TeacherState::new(vec![1, 1, 0].into(), 0, 1).unwrap();
        let mut direct = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let mut c = [1u32, 1, 0];
                c[a] += 1;
                c[b] += 1;
                direct -= theta.prob(a) * theta.prob(b) * counts_l1_error(&c, &theta).unwrap();
            }
        }
        assert!((values.value_at(&s).unwrap() - direct).abs() < 1e-12);

        let unreachable = TeacherState::new(vec![1, 1, 0].into(), 7, 1).unwrap();
        assert!(matches!(values.value_at(&unreachable), Err(Error::UnknownState(_))));
    }

    #[test]
    fn root_state_values_match_conditioned_oracle() {
        // Condition the oracle on the first observation by making it certain.
        let theta = cat(&[0.6, 0.4]);
        let spec = MdpSpec::negative_l1(&theta, 5, 1).unwrap();
        let (_, values) = solve(&spec).unwrap();
        let combined: f64 = spec
            .initial_states()
            .iter()
            .map(|(s, p)| p * values.value_at(s).unwrap())
            .sum();
        let bf = brute_force_value(&spec).unwrap();
        assert!((combined - bf).abs() < 1e-12);
    }

    #[test]
    fn oracle_equivalence_grid() {
        let thetas2 = [cat(&[0.5, 0.5]), cat(&[0.7, 0.3]), cat(&[0.9, 0.1])];
        let third = 1.0 / 3.0;
        let thetas3 = [
            cat(&[third, third, third]),
            cat(&[0.4, 0.3, 0.3]),
            cat(&[0.8, 0.15, 0.05]),
        ];
        for theta in thetas2.iter().chain(&thetas3) {
            for horizon in 1..=4 {
                let mut previous = f64::NEG_INFINITY;
                for budget in 0..=2 {
                    let spec = MdpSpec::negative_l1(theta, horizon, budget).unwrap();
                    let dp = root(&spec);
                    let bf = brute_force_value(&spec).unwrap();
                    assert!((dp - bf).abs() < 1e-12, "{theta} N={horizon} b={budget}: {dp} vs {bf}");
                    assert!(dp >= previous - 1e-12);
                    assert!((-2.0..=0.0).contains(&dp));
                    previous = dp;
                }
            }
        }
    }

    #[test]
    fn policy_is_feasible_and_bellman_consistent() {
        let theta = cat(&[0.4, 0.3, 0.3]);
        let spec = MdpSpec::negative_l1(&theta, 8, 2).unwrap();
        let (policy, values) = solve(&spec).unwrap();
        assert_eq!(policy.len(), values.len());
        for (s, a) in policy.iter() {
            if s.budget == 0 {
                assert!(a.is_keep(s));
            }
        }
        for (_, v) in values.iter() {
            assert!((-2.0..=0.0).contains(v));
        }

        let states: Vec<&TeacherState> = policy.iter().map(|(s, _)| s).collect();
        let mut rng = Seed(5).rng(0);
        for _ in 0..1000 {
            let s = *states.choose(&mut rng).unwrap();
            let a = policy.action(s).unwrap();
            let v = values.value_at(s).unwrap();
            let q = if is_terminal(s, spec.horizon) {
                crate::mdp::terminal_value(s, a, &spec).unwrap()
            } else {
                transitions(s, a, &spec)
                    .unwrap()
                    .iter()
                    .map(|(succ, p)| p * values.value_at(succ).unwrap())
                    .sum()
            };
            assert!((v - q).abs() <= TIE_TOLERANCE, "{s}: {v} vs {q}");
        }
    }

    #[test]
    fn reachable_states_within_bound() {
        for (theta, horizon, budget) in [
            (cat(&[0.5, 0.5]), 10, 2),
            (cat(&[0.4, 0.3, 0.3]), 6, 1),
            (cat(&[0.25, 0.25, 0.25, 0.25]), 5, 3),
        ] {
            let spec = MdpSpec::negative_l1(&theta, horizon, budget).unwrap();
            let (policy, _) = solve(&spec).unwrap();
            let bound = full_state_bound(theta.k() as u32, horizon, budget).unwrap();
            assert!(policy.len() as u128 <= bound);
            // Every count vector at the horizon shows up for some budget.
            let finals: HashSet<Vec<u32>> = policy
                .iter()
                .filter(|(s, _)| s.stage() == horizon)
                .map(|(s, _)| s.counts.as_slice().to_vec())
                .collect();
            assert_eq!(finals.len(), Compositions::new(horizon, theta.k()).count());
        }
    }

    #[test]
    fn dump_is_sorted_and_deterministic() {
        let spec = MdpSpec::negative_l1(&cat(&[0.5, 0.5]), 2, 1).unwrap();
        let (policy, _) = solve(&spec).unwrap();
        let dump = policy.dump();
        let (again, _) = solve(&spec).unwrap();
        assert_eq!(dump, again.dump());
        let expected = "\
stage,counts,budget,last_obs,action
1,0 1,1,1,keep
1,1 0,1,0,keep
2,0 2,0,1,keep
2,0 2,1,1,change:0
2,1 1,0,0,keep
2,1 1,0,1,keep
2,1 1,1,0,keep
2,1 1,1,1,keep
2,2 0,0,0,keep
2,2 0,1,0,change:1
";
        assert_eq!(dump, expected);
    }
}
