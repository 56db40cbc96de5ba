//! Command-line driver for the `corrlearn` experiments. Every subcommand
//! reads an optional TOML config, applies flag overrides, and writes CSV (or
//! JSON) rows to stdout or the configured output path.

pub mod config;
pub mod output;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use corrlearn::bounds::BoundReport;
use corrlearn::dp::{solve_with, SolverOptions, DEFAULT_STATE_CEILING};
use corrlearn::experiments::{
    run_bio, run_binomial, run_bounds, run_multinomial, run_variance_sweep, BoundsGrid,
    ExperimentRecord, TrialGrid, VarianceRow,
};
use corrlearn::likelihood::{bio_terminal_reward, BioExperiment, BioReward, CandidateSet, MisclassificationRate};
use corrlearn::mdp::MdpSpec;
use corrlearn::{Categorical, Seed};
use serde::Serialize;

pub use config::{ExperimentConfig, OutputFormat};
use output::{render, sig12, Row};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] corrlearn::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for bad input, 3 when the solver's state ceiling is hit, 4 for an
    /// internal invariant violation.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(corrlearn::Error::StateSpaceTooLarge { .. }) => 3,
            CliError::Core(corrlearn::Error::InvariantViolation(_)) => 4,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "corrlearn", version, about = "Budgeted online correction of observation streams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-trial original, online and batch errors for a K-outcome stream.
    Multinomial(ExperimentArgs),
    /// As `multinomial` for two outcomes, plus the closed-form attainable error.
    Binomial(ExperimentArgs),
    /// Variance of the corrected estimate over a horizon/budget grid.
    Variance(ExperimentArgs),
    /// Monte-Carlo check of the variance bound for the projected sum.
    Bounds(BoundsArgs),
    /// Misclassification rate of the ML parameter estimate.
    Bio(BioArgs),
    /// Solve one MDP and dump its optimal policy.
    Solve(SolveArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    pub budgets: Option<Vec<u32>>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Refuse MDPs whose state bound exceeds this.
    #[arg(long)]
    pub state_ceiling: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// True distribution, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub theta0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Largest observation values M, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ranges: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BioArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    #[arg(long)]
    pub theta0_label: Option<i64>,
    /// `absolute-difference` or `indicator`.
    #[arg(long, value_parser = parse_reward)]
    pub reward: Option<BioReward>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub theta0: Option<Vec<f64>>,
    #[arg(long)]
    pub horizon: Option<u32>,
    #[arg(long)]
    pub budget: Option<u32>,
    /// Use the ML-estimate reward over this candidate file.
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    /// Use the ML-estimate reward with this true label.
    #[arg(long)]
    pub theta0_label: Option<i64>,
    #[arg(long, value_parser = parse_reward)]
    pub reward: Option<BioReward>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub state_ceiling: Option<u64>,
}

fn parse_reward(s: &str) -> Result<BioReward, String> {
    match s {
        "absolute-difference" => Ok(BioReward::AbsoluteDifference),
        "indicator" => Ok(BioReward::Indicator),
        _ => Err(format!("unknown reward `{s}`")),
    }
}

impl CommonArgs {
    fn overrides(&self) -> ExperimentConfig {
        ExperimentConfig {
            seed: self.seed,
            trials: self.trials,
            horizons: self.horizons.clone(),
            budgets: self.budgets.clone(),
            output: self.output.clone(),
            format: self.format,
            state_ceiling: self.state_ceiling,
            ..Default::default()
        }
    }
}

fn load(path: Option<&PathBuf>, flags: ExperimentConfig, name: &str) -> Result<ExperimentConfig, CliError> {
    let file = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let config = file.merge(flags);
    config.check_experiment(name)?;
    Ok(config)
}

/// Rendered output plus where it should go.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub path: Option<PathBuf>,
    /// Extra human-readable line for stderr.
    pub note: Option<String>,
}

/// Runs a parsed command without touching stdout or the filesystem (other
/// than reading config and candidate files).
pub fn execute(command: &Command) -> Result<Output, CliError> {
    match command {
        Command::Multinomial(a) => records_command("multinomial", a),
        Command::Binomial(a) => records_command("binomial", a),
        Command::Variance(a) => variance_command(a),
        Command::Bounds(a) => bounds_command(a),
        Command::Bio(a) => bio_command(a),
        Command::Solve(a) => solve_command(a),
    }
}

/// Executes `cli` and writes its output.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let out = execute(&cli.command)?;
    if let Some(note) = &out.note {
        eprintln!("{note}");
    }
    match &out.path {
        Some(p) => fs::write(p, &out.text)?,
        None => print!("{}", out.text),
    }
    Ok(())
}

fn solver_options(config: &ExperimentConfig) -> SolverOptions {
    SolverOptions {
        state_ceiling: config.state_ceiling.map_or(DEFAULT_STATE_CEILING, u128::from),
    }
}

fn non_empty<T: Clone>(v: &Option<Vec<T>>, default: &[T], field: &str) -> Result<Vec<T>, CliError> {
    let v = v.clone().unwrap_or_else(|| default.to_vec());
    if v.is_empty() {
        return Err(CliError::Config(format!("`{field}` must not be empty")));
    }
    Ok(v)
}

fn positive_trials(config: &ExperimentConfig, default: u64) -> Result<u64, CliError> {
    match config.trials.unwrap_or(default) {
        0 => Err(CliError::Config("`trials` must be positive".into())),
        t => Ok(t),
    }
}

fn trial_grid(config: &ExperimentConfig, theta0: &[f64], horizons: &[u32], budgets: &[u32], trials: u64) -> Result<TrialGrid, CliError> {
    let horizons = non_empty(&config.horizons, horizons, "horizons")?;
    if horizons.contains(&0) {
        return Err(CliError::Config("horizons must be positive".into()));
    }
    Ok(TrialGrid {
        theta0: Categorical::new(config.theta0.clone().unwrap_or_else(|| theta0.to_vec()))?,
        horizons,
        budgets: non_empty(&config.budgets, budgets, "budgets")?,
        trials: positive_trials(config, trials)?,
        seed: Seed(config.require_seed()?),
        solver: solver_options(config),
    })
}

fn records_command(name: &str, args: &ExperimentArgs) -> Result<Output, CliError> {
    let flags = ExperimentConfig {
        theta0: args.theta0.clone(),
        ..args.common.overrides()
    };
    let config = load(args.common.config.as_ref(), flags, name)?;
    let format = config.format.unwrap_or_default();
    let text = if name == "binomial" {
        let grid = trial_grid(&config, &[0.5, 0.5], &[10], &[1], 50)?;
        let rows: Vec<BinomialRow> = run_binomial(&grid)?.into_iter().map(BinomialRow).collect();
        render(&rows, format)?
    } else {
        let grid = trial_grid(&config, &[0.4, 0.3, 0.3], &[5], &[1], 50)?;
        let rows: Vec<MultinomialRow> = run_multinomial(&grid)?.into_iter().map(MultinomialRow).collect();
        render(&rows, format)?
    };
    Ok(Output {
        text,
        path: config.output,
        note: None,
    })
}

fn variance_command(args: &ExperimentArgs) -> Result<Output, CliError> {
    let flags = ExperimentConfig {
        theta0: args.theta0.clone(),
        ..args.common.overrides()
    };
    let config = load(args.common.config.as_ref(), flags, "variance")?;
    let grid = trial_grid(&config, &[0.4, 0.3, 0.3], &[5, 10, 15, 20, 25], &[0, 1, 2], 2000)?;
    let rows: Vec<VarianceCsv> = run_variance_sweep(&grid)?.into_iter().map(VarianceCsv).collect();
    Ok(Output {
        text: render(&rows, config.format.unwrap_or_default())?,
        path: config.output,
        note: None,
    })
}

fn bounds_command(args: &BoundsArgs) -> Result<Output, CliError> {
    let flags = ExperimentConfig {
        ranges: args.ranges.clone(),
        ..args.common.overrides()
    };
    let config = load(args.common.config.as_ref(), flags, "bounds")?;
    let grid = BoundsGrid {
        horizons: non_empty(&config.horizons, &[5, 10, 25], "horizons")?
            .into_iter()
            .map(u64::from)
            .collect(),
        ranges: non_empty(&config.ranges, &[1, 2, 4], "ranges")?,
        budgets: non_empty(&config.budgets, &[0, 1, 3, 5], "budgets")?
            .into_iter()
            .map(u64::from)
            .collect(),
        trials: positive_trials(&config, 100_000)?,
        seed: Seed(config.require_seed()?),
    };
    let rows: Vec<BoundCsv> = run_bounds(&grid)?.into_iter().map(BoundCsv).collect();
    Ok(Output {
        text: render(&rows, config.format.unwrap_or_default())?,
        path: config.output,
        note: None,
    })
}

fn candidate_set(config: &ExperimentConfig) -> Result<CandidateSet, CliError> {
    Ok(match &config.candidates {
        Some(p) => CandidateSet::load(p)?,
        None => CandidateSet::time_perception(),
    })
}

fn bio_command(args: &BioArgs) -> Result<Output, CliError> {
    let flags = ExperimentConfig {
        candidates: args.candidates.clone(),
        theta0_label: args.theta0_label,
        reward: args.reward,
        ..args.common.overrides()
    };
    let config = load(args.common.config.as_ref(), flags, "bio")?;
    let horizons = non_empty(&config.horizons, &[10], "horizons")?;
    if horizons.contains(&0) {
        return Err(CliError::Config("horizons must be positive".into()));
    }
    let exp = BioExperiment {
        theta0: config.theta0_label.unwrap_or(4),
        candidates: candidate_set(&config)?,
        reward: config.reward.unwrap_or_default(),
        horizon: horizons[0],
        budgets: non_empty(&config.budgets, &[0, 1, 2], "budgets")?,
        trials: positive_trials(&config, 1000)?,
        seed: Seed(config.require_seed()?),
        solver: solver_options(&config),
    };
    let rows: Vec<BioCsv> = run_bio(&exp, &horizons)?.into_iter().map(BioCsv).collect();
    Ok(Output {
        text: render(&rows, config.format.unwrap_or_default())?,
        path: config.output,
        note: None,
    })
}

fn single(v: &Option<Vec<u32>>, default: u32, field: &str) -> Result<u32, CliError> {
    match v.as_deref() {
        None => Ok(default),
        Some([x]) => Ok(*x),
        Some(_) => Err(CliError::Config(format!("`solve` needs exactly one value in `{field}`"))),
    }
}

fn solve_command(args: &SolveArgs) -> Result<Output, CliError> {
    let flags = ExperimentConfig {
        theta0: args.theta0.clone(),
        horizons: args.horizon.map(|h| vec![h]),
        budgets: args.budget.map(|b| vec![b]),
        candidates: args.candidates.clone(),
        theta0_label: args.theta0_label,
        reward: args.reward,
        output: args.output.clone(),
        state_ceiling: args.state_ceiling,
        ..Default::default()
    };
    let config = load(args.config.as_ref(), flags, "solve")?;
    let horizon = single(&config.horizons, 10, "horizons")?;
    let budget = single(&config.budgets, 1, "budgets")?;
    if horizon == 0 {
        return Err(CliError::Config("horizon must be positive".into()));
    }
    let bio = config.theta0_label.is_some() || config.candidates.is_some();
    let spec = if bio {
        if config.theta0.is_some() {
            return Err(CliError::Config(
                "`theta0` and candidate labels are mutually exclusive".into(),
            ));
        }
        let set = candidate_set(&config)?;
        let label = config.theta0_label.unwrap_or(4);
        let reward = bio_terminal_reward(label, &set, config.reward.unwrap_or_default())?;
        MdpSpec::new(horizon, budget, set.get(label)?.action_dist.clone(), reward)?
    } else {
        let theta0 = Categorical::new(config.theta0.clone().unwrap_or_else(|| vec![0.5, 0.5]))?;
        MdpSpec::negative_l1(&theta0, horizon, budget)?
    };
    let (policy, values) = solve_with(&spec, solver_options(&config))?;
    Ok(Output {
        text: policy.dump(),
        path: config.output,
        note: Some(format!("root value {}", sig12(values.root_value(&spec)?))),
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(into = "RecordJson")]
struct MultinomialRow(ExperimentRecord);

#[derive(Debug, Clone, Serialize)]
#[serde(into = "RecordJson")]
struct BinomialRow(ExperimentRecord);

#[derive(Serialize)]
struct RecordJson {
    experiment: String,
    seed: u64,
    trial: u64,
    horizon: u32,
    budget: u32,
    error_original: f64,
    error_online: f64,
    error_batch: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_attainable: Option<f64>,
    budget_spent: u32,
}

impl From<&ExperimentRecord> for RecordJson {
    fn from(r: &ExperimentRecord) -> Self {
        Self {
            experiment: r.experiment.clone(),
            seed: r.seed,
            trial: r.trial,
            horizon: r.horizon,
            budget: r.budget,
            error_original: r.error_original,
            error_online: r.error_online,
            error_batch: r.error_batch,
            error_attainable: r.error_attainable,
            budget_spent: r.budget_spent,
        }
    }
}

impl From<MultinomialRow> for RecordJson {
    fn from(r: MultinomialRow) -> Self {
        (&r.0).into()
    }
}

impl From<BinomialRow> for RecordJson {
    fn from(r: BinomialRow) -> Self {
        (&r.0).into()
    }
}

fn record_cells(r: &ExperimentRecord) -> Vec<String> {
    vec![
        r.experiment.clone(),
        r.seed.to_string(),
        r.trial.to_string(),
        r.horizon.to_string(),
        r.budget.to_string(),
        sig12(r.error_original),
        sig12(r.error_online),
        sig12(r.error_batch),
    ]
}

impl Row for MultinomialRow {
    const HEADER: &'static [&'static str] = &[
        "experiment",
        "seed",
        "trial",
        "horizon",
        "budget",
        "error_original",
        "error_online",
        "error_batch",
        "budget_spent",
    ];
    fn cells(&self) -> Vec<String> {
        let mut c = record_cells(&self.0);
        c.push(self.0.budget_spent.to_string());
        c
    }
}

impl Row for BinomialRow {
    const HEADER: &'static [&'static str] = &[
        "experiment",
        "seed",
        "trial",
        "horizon",
        "budget",
        "error_original",
        "error_online",
        "error_batch",
        "error_attainable",
        "budget_spent",
    ];
    fn cells(&self) -> Vec<String> {
        let mut c = record_cells(&self.0);
        c.push(self.0.error_attainable.map(sig12).unwrap_or_default());
        c.push(self.0.budget_spent.to_string());
        c
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(into = "VarianceJson")]
struct VarianceCsv(VarianceRow);

#[derive(Serialize)]
struct VarianceJson {
    horizon: u32,
    budget: u32,
    trials: u64,
    mean: f64,
    variance: f64,
    std_error: f64,
}

impl From<VarianceCsv> for VarianceJson {
    fn from(VarianceCsv(r): VarianceCsv) -> Self {
        Self {
            horizon: r.horizon,
            budget: r.budget,
            trials: r.trials,
            mean: r.mean,
            variance: r.variance,
            std_error: r.std_error,
        }
    }
}

impl Row for VarianceCsv {
    const HEADER: &'static [&'static str] = &["horizon", "budget", "trials", "mean", "variance", "std_error"];
    fn cells(&self) -> Vec<String> {
        let r = &self.0;
        vec![
            r.horizon.to_string(),
            r.budget.to_string(),
            r.trials.to_string(),
            sig12(r.mean),
            sig12(r.variance),
            sig12(r.std_error),
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(into = "BoundJson")]
struct BoundCsv(BoundReport);

#[derive(Serialize)]
struct BoundJson {
    #[serde(rename = "N")]
    n: u64,
    #[serde(rename = "M")]
    m: u64,
    #[serde(rename = "B")]
    b: u64,
    trials: u64,
    bound_abs: f64,
    bound_ratio_paper: f64,
    bound_ratio_corrected: f64,
    var_orig: f64,
    var_orig_std_error: f64,
    var_corr: f64,
    ratio: f64,
}

impl From<BoundCsv> for BoundJson {
    fn from(BoundCsv(r): BoundCsv) -> Self {
        Self {
            n: r.n,
            m: r.m,
            b: r.b,
            trials: r.trials,
            bound_abs: r.bound_abs,
            bound_ratio_paper: r.bound_ratio_paper,
            bound_ratio_corrected: r.bound_ratio_corrected,
            var_orig: r.var_original,
            var_orig_std_error: r.var_original_std_error,
            var_corr: r.var_corrected,
            ratio: r.ratio,
        }
    }
}

impl Row for BoundCsv {
    const HEADER: &'static [&'static str] = &[
        "N",
        "M",
        "B",
        "trials",
        "bound_abs",
        "bound_ratio_paper",
        "var_orig",
        "var_corr",
        "ratio",
    ];
    fn cells(&self) -> Vec<String> {
        let r = &self.0;
        vec![
            r.n.to_string(),
            r.m.to_string(),
            r.b.to_string(),
            r.trials.to_string(),
            sig12(r.bound_abs),
            sig12(r.bound_ratio_paper),
            sig12(r.var_original),
            sig12(r.var_corrected),
            sig12(r.ratio),
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(into = "BioJson")]
struct BioCsv(MisclassificationRate);

#[derive(Serialize)]
struct BioJson {
    horizon: u32,
    budget: u32,
    trials: u64,
    misclassified: u64,
    rate: f64,
}

impl From<BioCsv> for BioJson {
    fn from(BioCsv(r): BioCsv) -> Self {
        Self {
            horizon: r.horizon,
            budget: r.budget,
            trials: r.trials,
            misclassified: r.misclassified,
            rate: r.rate,
        }
    }
}

impl Row for BioCsv {
    const HEADER: &'static [&'static str] = &["horizon", "budget", "trials", "misclassified", "rate"];
    fn cells(&self) -> Vec<String> {
        let r = &self.0;
        vec![
            r.horizon.to_string(),
            r.budget.to_string(),
            r.trials.to_string(),
            r.misclassified.to_string(),
            sig12(r.rate),
        ]
    }
}
