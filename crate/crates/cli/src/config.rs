use std::fs;
use std::path::{Path, PathBuf};

use corrlearn::likelihood::BioReward;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Settings shared by every subcommand. Each field may come from the TOML
/// file or a command-line flag; flags win.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Subcommand the file was written for. Checked against the one invoked.
    pub experiment: Option<String>,
    pub theta0: Option<Vec<f64>>,
    pub horizons: Option<Vec<u32>>,
    pub budgets: Option<Vec<u32>>,
    /// Largest observation value `M` for the bounds sweep.
    pub ranges: Option<Vec<u64>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    /// Candidate-set file for `bio` and bio-reward `solve`. The built-in
    /// time-perception set is used when absent.
    pub candidates: Option<PathBuf>,
    pub theta0_label: Option<i64>,
    pub reward: Option<BioReward>,
    pub state_ceiling: Option<u64>,
}

impl ExperimentConfig {
    /// Parses a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.output, &mut config.candidates].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    /// Overwrites every field that is set in `flags`.
    pub fn merge(mut self, flags: ExperimentConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if flags.$f.is_some() { self.$f = flags.$f; } )* };
        }
        take!(
            experiment,
            theta0,
            horizons,
            budgets,
            ranges,
            trials,
            seed,
            output,
            format,
            candidates,
            theta0_label,
            reward,
            state_ceiling
        );
        self
    }

    pub fn check_experiment(&self, name: &str) -> Result<(), CliError> {
        match &self.experiment {
            Some(e) if e != name => Err(CliError::Config(format!(
                "config is for experiment `{e}`, not `{name}`"
            ))),
            _ => Ok(()),
        }
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config("a seed is required: pass --seed or set `seed`".into()))
    }
}
