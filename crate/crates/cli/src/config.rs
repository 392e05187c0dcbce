//! Run configuration: one TOML file, every key optional, unknown keys
//! rejected. The hash of the parsed configuration stamps every output.

use std::path::{Path, PathBuf};

use locomotion::learning::{LearningConfig, RewardSpec, StateBox, StepEnvironment, TerminalSpec};
use locomotion::lipm::LipmParams;
use locomotion::policy::{ActionSpace, RbfGrid};
use locomotion::sim::{BipedScenario, ManipulatorConfig, ReplanPolicy};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Directory for outputs whose path is not given on the command line.
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out"), format: Format::Csv }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Start states drawn uniformly from the learning state box.
    pub starts: usize,
    /// Push size (m/s) as a force impulse on a reference mass.
    pub push_force: f64,
    pub push_duration: f64,
    pub reference_mass: f64,
    pub directions: usize,
    pub steps: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { starts: 200, push_force: 520.0, push_duration: 0.1, reference_mass: 135.9, directions: 8, steps: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub manipulator: ManipulatorConfig,
    pub biped: BipedScenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seed for training and sampled sweeps.
    pub seed: u64,
    pub lipm: LipmParams,
    pub states: StateBox,
    pub reward: RewardSpec,
    pub terminal: TerminalSpec,
    pub grid: RbfGrid,
    pub actions: ActionSpace,
    /// Actor-critic settings. The seed comes from the top-level `seed`.
    pub learning: LearningConfig,
    pub replan: ReplanPolicy,
    pub sweep: SweepConfig,
    pub controller: ControllerConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let learning = LearningConfig::default();
        RunConfig {
            seed: learning.seed,
            lipm: LipmParams::default(),
            states: StateBox::default(),
            reward: RewardSpec::default(),
            terminal: TerminalSpec::default(),
            grid: RbfGrid::default(),
            actions: ActionSpace::default(),
            learning,
            replan: ReplanPolicy::default(),
            sweep: SweepConfig::default(),
            controller: ControllerConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        if table.get("learning").and_then(|l| l.get("seed")).is_some() {
            return Err(CliError::Parse("`learning.seed` is not a key; set the top-level `seed`".into()));
        }
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.set_seed(cfg.seed);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self, CliError> {
        path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.learning.seed = seed;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |e: String| CliError::Parse(e);
        self.grid.validate().map_err(|e| bad(e.to_string()))?;
        self.actions.validate().map_err(|e| bad(e.to_string()))?;
        self.learning.validate().map_err(|e| bad(e.to_string()))?;
        self.replan.validate().map_err(|e| bad(e.to_string()))?;
        if (0..3).any(|a| !(self.states.lo[a] < self.states.hi[a])) {
            return Err(bad("state box bounds must satisfy lo < hi".into()));
        }
        let s = &self.sweep;
        if s.directions == 0 || !(s.reference_mass > 0.0) || !(s.push_duration >= 0.0) {
            return Err(bad("sweep needs directions > 0, a positive mass and a non-negative duration".into()));
        }
        Ok(())
    }

    pub fn environment(&self) -> StepEnvironment {
        StepEnvironment {
            lipm: self.lipm,
            states: self.states.clone(),
            reward: self.reward.clone(),
            terminal: self.terminal.clone(),
        }
    }

    /// SHA-256 of the canonical JSON form of the parsed configuration. Output
    /// location and format do not affect results and are left out.
    pub fn hash(&self) -> String {
        let canonical = RunConfig {
            output: OutputConfig::default(),
            ..self.clone()
        };
        let json = serde_json::to_vec(&canonical).expect("configuration serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn to_toml(&self) -> String {
        let mut table = toml::Table::try_from(self).expect("configuration serializes");
        if let Some(toml::Value::Table(l)) = table.get_mut("learning") {
            l.remove("seed");
        }
        toml::to_string_pretty(&table).expect("configuration serializes")
    }
}
