//! Declarative run configuration read from a TOML file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spgg_core::analysis::export::Format;
use spgg_core::analysis::PenaltyRule;
use spgg_core::game::{CostModel, GameParams};
use spgg_core::rl::{EnvCost, ObservationMode, Surface, SyntheticEnv, TrainerConfig};
use spgg_core::solver::SolverConfig;
use spgg_core::theory::SweepParam;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    /// Seeded sigmoid over all six settings.
    #[default]
    Sigmoid,
    /// Score affine in the max-tokens setting.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub surface: SurfaceKind,
    pub surface_seed: u64,
    pub synergy: f64,
    pub kappa: f64,
    pub mode: ObservationMode,
    pub task_seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            surface: SurfaceKind::Sigmoid,
            surface_seed: 0,
            synergy: 0.0,
            kappa: 1.0,
            mode: ObservationMode::Po,
            task_seed: 0,
        }
    }
}

impl EnvConfig {
    /// Environment whose score range matches `game`.
    pub fn build(&self, game: &GameParams) -> SyntheticEnv {
        let surface = match self.surface {
            SurfaceKind::Sigmoid => Surface::seeded_sigmoid(self.surface_seed, self.synergy),
            SurfaceKind::Linear => Surface::Linear {
                coordinate: spgg_core::rl::env::MAX_TOKENS,
            },
        };
        SyntheticEnv {
            surface,
            cost: EnvCost::MaxTokens { kappa: self.kappa },
            mode: self.mode,
            c_min: game.c_min,
            c_max: game.c_max,
            task_seed: self.task_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub param: SweepParam,
    /// Defaults to the parameter's standard range.
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub count: usize,
    pub penalty_rule: PenaltyRule,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            param: SweepParam::Gamma,
            lo: None,
            hi: None,
            count: 25,
            penalty_rule: PenaltyRule::Fixed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParetoConfig {
    pub samples: usize,
    /// Points per axis of the exhaustive grid check; off when absent.
    pub grid: Option<usize>,
}

impl Default for ParetoConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub probe_points: usize,
    pub lemma_grid: usize,
    pub statics_param: SweepParam,
    pub statics_count: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            probe_points: 11,
            lemma_grid: 25,
            statics_param: SweepParam::Gamma,
            statics_count: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BestResponseConfig {
    /// Zero-based responding agent.
    pub agent: usize,
    /// Prior sum; defaults to `agent * c_min`.
    pub s_prev: Option<f64>,
    /// Number of predecessor contributions probed across `[c_min, c_max]`.
    pub points: usize,
}

impl Default for BestResponseConfig {
    fn default() -> Self {
        Self {
            agent: 1,
            s_prev: None,
            points: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub game: GameParams,
    pub cost: CostModel,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub trainer: TrainerConfig,
    #[serde(default)]
    pub env: EnvConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub pareto: ParetoConfig,
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default)]
    pub best_response: BestResponseConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: None,
            format: OutputFormat::Csv,
            threads: None,
            game: GameParams::baseline(),
            cost: CostModel::default(),
            solver: SolverConfig::default(),
            trainer: TrainerConfig::default(),
            env: EnvConfig::default(),
            sweep: SweepConfig::default(),
            pareto: ParetoConfig::default(),
            check: CheckConfig::default(),
            best_response: BestResponseConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let wrap = |section: &str, e: &dyn std::fmt::Display| CliError::Config(format!("[{section}] {e}"));
        self.game.validate().map_err(|e| wrap("game", &e))?;
        self.cost.validate().map_err(|e| wrap("cost", &e))?;
        self.solver.validate().map_err(|e| wrap("solver", &e))?;
        self.trainer.validate().map_err(|e| wrap("trainer", &e))?;
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        if !(self.env.kappa > 0.0 && self.env.kappa.is_finite()) {
            return Err(CliError::Config("[env] kappa must be positive".into()));
        }
        Ok(())
    }
}
