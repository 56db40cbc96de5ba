//! Entry points for the browser demo. Each returns a JSON string so the page
//! needs no bindings beyond plain strings; the `wasm_bindgen` exports at the
//! bottom are thin wrappers over these.

use corrlearn::batch::batch_correct;
use corrlearn::bounds::monte_carlo_report;
use corrlearn::dp::{solve_with, SolverOptions};
use corrlearn::experiments::{run_variance_sweep, TrialGrid};
use corrlearn::mdp::MdpSpec;
use corrlearn::observation::{counts_from_sequence, counts_l1_error, sample_sequence};
use corrlearn::teacher::run_online;
use corrlearn::{Categorical, ObservationSequence, Seed};
use serde::Serialize;

// Keeps a single click under a second or so in the browser.
const DEMO_STATE_CEILING: u128 = 2_000_000;
const MAX_TRIALS: u64 = 200_000;

type DemoResult = Result<String, String>;

fn solver() -> SolverOptions {
    SolverOptions {
        state_ceiling: DEMO_STATE_CEILING,
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, String> {
    text.split([',', ' '])
        .filter(|s| !s.is_empty())
        .map(|s| s.trim().parse().map_err(|_| format!("bad {what} value `{s}`")))
        .collect()
}

fn parse_theta(text: &str) -> Result<Categorical, String> {
    Categorical::new(parse_list(text, "probability")?).map_err(|e| e.to_string())
}

fn json<T: Serialize>(value: &T) -> DemoResult {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct OnlineDemo {
    original: Vec<usize>,
    corrected: Vec<usize>,
    budget_spent: u32,
    error_original: f64,
    error_online: f64,
    error_batch: f64,
    /// Expected error of the optimal policy before any data is seen.
    expected_error: f64,
}

/// Solves the MDP for `theta0` and the sequence's length, then replays the
/// sequence through the optimal policy. `sequence` is a string of outcome
/// digits, e.g. `"0120"`.
pub fn online_demo(theta0: &str, sequence: &str, budget: u32) -> DemoResult {
    let theta = parse_theta(theta0)?;
    let values = sequence
        .chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| c.to_digit(10).map(|d| d as usize).ok_or(format!("bad outcome `{c}`")))
        .collect::<Result<Vec<_>, _>>()?;
    let seq = ObservationSequence::new(values, theta.k()).map_err(|e| e.to_string())?;
    let spec = MdpSpec::negative_l1(&theta, seq.len() as u32, budget).map_err(|e| e.to_string())?;
    let (policy, table) = solve_with(&spec, solver()).map_err(|e| e.to_string())?;
    let trace = run_online(&seq, &policy, budget).map_err(|e| e.to_string())?;
    let counts = counts_from_sequence(&seq);
    let err = |c: &[u32]| counts_l1_error(c, &theta).map_err(|e| e.to_string());
    json(&OnlineDemo {
        original: seq.values().to_vec(),
        corrected: trace.corrected.values().to_vec(),
        budget_spent: trace.budget_spent,
        error_original: err(counts.as_slice())?,
        error_online: err(trace.final_counts.as_slice())?,
        error_batch: batch_correct(&counts, &theta, budget).map_err(|e| e.to_string())?.error,
        expected_error: -table.root_value(&spec).map_err(|e| e.to_string())?,
    })
}

/// A seeded random sequence as a digit string.
pub fn sample_digits(theta0: &str, n: u32, seed: u64) -> DemoResult {
    let theta = parse_theta(theta0)?;
    if theta.k() > 10 {
        return Err("at most 10 outcomes".into());
    }
    let seq = sample_sequence(&theta, n as usize, Seed(seed)).map_err(|e| e.to_string())?;
    Ok(seq.values().iter().map(|v| char::from(b'0' + *v as u8)).collect())
}

#[derive(Serialize)]
struct VariancePoint {
    horizon: u32,
    budget: u32,
    variance: f64,
    std_error: f64,
}

/// Variance of the corrected first-coordinate estimate for every
/// horizon/budget pair.
pub fn variance_curve(theta0: &str, horizons: &str, budgets: &str, trials: u64, seed: u64) -> DemoResult {
    let grid = TrialGrid {
        theta0: parse_theta(theta0)?,
        horizons: parse_list(horizons, "horizon")?,
        budgets: parse_list(budgets, "budget")?,
        trials: trials.clamp(2, MAX_TRIALS),
        seed: Seed(seed),
        solver: solver(),
    };
    if grid.horizons.contains(&0) {
        return Err("horizons must be positive".into());
    }
    let rows = run_variance_sweep(&grid).map_err(|e| e.to_string())?;
    json(
        &rows
            .into_iter()
            .map(|r| VariancePoint {
                horizon: r.horizon,
                budget: r.budget,
                variance: r.variance,
                std_error: r.std_error,
            })
            .collect::<Vec<_>>(),
    )
}

#[derive(Serialize)]
struct BoundPoint {
    budget: u64,
    bound_abs: f64,
    bound_ratio_paper: f64,
    bound_ratio_corrected: f64,
    var_original: f64,
    var_corrected: f64,
    ratio: f64,
}

/// Empirical and analytic variance of the projected sum for budgets
/// `0..=max_budget` (capped at `n * m`).
pub fn bound_curve(n: u64, m: u64, max_budget: u64, trials: u64, seed: u64) -> DemoResult {
    let top = max_budget.min(n.saturating_mul(m));
    let trials = trials.min(MAX_TRIALS);
    let points = (0..=top)
        .map(|b| {
            monte_carlo_report(n, m, b, trials, Seed(seed)).map(|r| BoundPoint {
                budget: b,
                bound_abs: r.bound_abs,
                bound_ratio_paper: r.bound_ratio_paper,
                bound_ratio_corrected: r.bound_ratio_corrected,
                var_original: r.var_original,
                var_corrected: r.var_corrected,
                ratio: r.ratio,
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    json(&points)
}

#[cfg(target_arch = "wasm32")]
mod wasm {
    use wasm_bindgen::prelude::*;

    fn js(r: super::DemoResult) -> Result<String, JsError> {
        r.map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = onlineDemo)]
    pub fn online_demo(theta0: &str, sequence: &str, budget: u32) -> Result<String, JsError> {
        js(super::online_demo(theta0, sequence, budget))
    }

    #[wasm_bindgen(js_name = sampleDigits)]
    pub fn sample_digits(theta0: &str, n: u32, seed: u64) -> Result<String, JsError> {
        js(super::sample_digits(theta0, n, seed))
    }

    #[wasm_bindgen(js_name = varianceCurve)]
    pub fn variance_curve(theta0: &str, horizons: &str, budgets: &str, trials: u64, seed: u64) -> Result<String, JsError> {
        js(super::variance_curve(theta0, horizons, budgets, trials, seed))
    }

    #[wasm_bindgen(js_name = boundCurve)]
    pub fn bound_curve(n: u64, m: u64, max_budget: u64, trials: u64, seed: u64) -> Result<String, JsError> {
        js(super::bound_curve(n, m, max_budget, trials, seed))
    }
}
