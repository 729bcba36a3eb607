//! Meta-policy training: agents pick generation settings in sequence, are
//! paid the synergy-aligned reward on their realized scores, and are updated
//! with clipped PPO.

pub mod belief;
pub mod env;
pub mod policy;
pub mod ppo;
mod trainer;

use serde::{Deserialize, Serialize};

use crate::error::RlError;
use crate::game::GameParams;

pub use belief::{build_belief, BeliefDims, BeliefState, PositionEncoding};
pub use env::{ConfigVector, EnvCost, HistoryAggregation, ObservationMode, Surface, SyntheticEnv, ACTION_DIM};
pub use policy::{sample_action, ActionSample, Adam, PolicyNet};
pub use ppo::{ppo_loss, ppo_update, LossOutput, Transition, UpdateStats};
pub use trainer::{
    compute_rewards, early_stop, load_checkpoint, one_step_advantage, rollout_episode, save_checkpoint, train,
    AgentStats, Checkpoint, RewardSignal, RolloutContext, Step, TrainOptions, TrainOutcome, Trajectory,
    CHECKPOINT_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarlyStopConfig {
    pub r_th: f64,
    pub c_target: f64,
    pub epsilon: f64,
    pub t_max: usize,
}

impl Default for EarlyStopConfig {
    fn default() -> Self {
        Self {
            r_th: 1.0,
            c_target: 0.85,
            epsilon: 0.01,
            t_max: 500,
        }
    }
}

/// Stage-game parameters used during training.
pub fn training_game() -> GameParams {
    GameParams {
        threshold: 0.85,
        penalty: 1.5,
        ..GameParams::baseline()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub ppo_epochs: usize,
    pub minibatch: usize,
    pub gamma_disc: f64,
    /// Recorded for completeness; episodes are one step per agent, so the
    /// advantage is the one-step form and this value has no effect.
    pub gae_lambda: f64,
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    /// `false` drops the entropy term from the loss.
    pub entropy_bonus: bool,
    pub grad_clip: f64,
    pub target_kl: f64,
    pub learning_rate: f64,
    /// Rollouts collected per episode before the update.
    pub buffer_size: usize,
    pub hidden: usize,
    pub init_std: f64,
    pub belief: BeliefDims,
    pub game: GameParams,
    pub early_stop: EarlyStopConfig,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            ppo_epochs: 4,
            minibatch: 16,
            gamma_disc: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.02,
            entropy_bonus: true,
            grad_clip: 0.5,
            target_kl: 0.015,
            learning_rate: 5e-4,
            buffer_size: 512,
            hidden: 64,
            init_std: 0.5,
            belief: BeliefDims::default(),
            game: training_game(),
            early_stop: EarlyStopConfig::default(),
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        let bad = |msg: &str| Err(RlError::Config(msg.to_string()));
        let positive = [
            ("gamma_disc", self.gamma_disc),
            ("gae_lambda", self.gae_lambda),
            ("value_coef", self.value_coef),
            ("grad_clip", self.grad_clip),
            ("learning_rate", self.learning_rate),
            ("init_std", self.init_std),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be positive and finite"));
            }
        }
        if !(self.entropy_coef >= 0.0 && self.target_kl >= 0.0) {
            return bad("entropy_coef and target_kl must be non-negative");
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return bad("clip must lie in (0, 1)");
        }
        if self.ppo_epochs == 0 || self.minibatch == 0 || self.buffer_size == 0 || self.hidden == 0 {
            return bad("ppo_epochs, minibatch, buffer_size and hidden must be positive");
        }
        if self.buffer_size % self.minibatch != 0 {
            return bad("buffer_size must be divisible by minibatch");
        }
        if self.belief.context < 4 {
            return bad("belief.context needs at least 4 features");
        }
        if !(self.early_stop.epsilon >= 0.0) {
            return bad("early_stop.epsilon must be non-negative");
        }
        self.game.validate()?;
        Ok(())
    }
}
