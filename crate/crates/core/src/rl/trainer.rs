use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::belief::{build_belief, BeliefDims};
use super::env::SyntheticEnv;
use super::policy::{sample_action, ActionSample, Adam, PolicyNet};
use super::ppo::{ppo_update, Transition};
use super::{EarlyStopConfig, TrainerConfig};
use crate::analysis::export::CurvePoint;
use crate::error::RlError;
use crate::game::{reward_with_cost, ContributionProfile, GameParams};

pub const CHECKPOINT_VERSION: u32 = 1;

const DOMAIN_INIT: u64 = 1;
const DOMAIN_ROLLOUT: u64 = 2;
const DOMAIN_UPDATE: u64 = 3;

/// Generator for one `(domain, index)` pair of a run; independent of the
/// order in which pairs are visited.
fn stream_rng(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}

/// Per-agent statistics of the previous episode.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentStats {
    pub mean_reward: f64,
    pub mean_score: f64,
}

/// What the agents know about training so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutContext {
    pub dims: BeliefDims,
    pub task_seed: u64,
    pub agents: Vec<AgentStats>,
    /// Fraction of the episode budget already used.
    pub progress: f64,
}

impl RolloutContext {
    pub fn fresh(n: usize, dims: BeliefDims, task_seed: u64) -> Self {
        Self {
            dims,
            task_seed,
            agents: vec![AgentStats::default(); n],
            progress: 0.0,
        }
    }

    /// Context features of agent `i` given the predecessor's score. The
    /// layout does not depend on the observation mode.
    fn features(&self, agent: usize, predecessor: Option<f64>) -> [f64; 5] {
        let s = self.agents.get(agent).copied().unwrap_or_default();
        [
            s.mean_reward,
            s.mean_score,
            self.progress,
            predecessor.unwrap_or(0.0),
            if predecessor.is_some() { 1.0 } else { 0.0 },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub belief: Vec<f64>,
    pub action: ActionSample,
    pub score: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn scores(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.score).collect()
    }
}

/// Agents act in order; each environment call sees the history allowed by
/// the observation mode.
pub fn rollout_episode<R: Rng + ?Sized>(
    env: &SyntheticEnv,
    policies: &[PolicyNet],
    context: &RolloutContext,
    rng: &mut R,
) -> Result<Trajectory, RlError> {
    let mut history: Vec<f64> = Vec::with_capacity(policies.len());
    let mut steps = Vec::with_capacity(policies.len());
    for (i, policy) in policies.iter().enumerate() {
        let features = context.features(i, history.last().copied());
        let belief = build_belief(context.task_seed, &features, i, &context.dims).to_vec();
        let action = sample_action(policy, &belief, rng)?;
        let score = env.score(&action.normalized, &history)?;
        let cost = env.cost(&action.normalized, score);
        history.push(score);
        steps.push(Step {
            belief,
            action,
            score,
            cost,
        });
    }
    Ok(Trajectory { steps })
}

/// Reward and one-step advantage of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSignal {
    pub reward: f64,
    pub advantage: f64,
}

/// `R + gamma_disc * V(b') - V(b)`.
pub fn one_step_advantage(reward: f64, value: f64, next_value: f64, gamma_disc: f64) -> f64 {
    reward + gamma_disc * next_value - value
}

/// Game rewards on the realized scores. Each agent's episode ends with its
/// own action, so the successor value is zero and `A_i = R_i - V(b_i)`.
pub fn compute_rewards(trajectory: &Trajectory, params: &GameParams) -> Result<Vec<RewardSignal>, RlError> {
    let profile = ContributionProfile::new(trajectory.scores(), params)?;
    trajectory
        .steps
        .iter()
        .enumerate()
        .map(|(i, step)| {
            let reward = reward_with_cost(i, &profile, params, step.cost)?.total;
            Ok(RewardSignal {
                reward,
                advantage: one_step_advantage(reward, step.action.value, 0.0, 1.0),
            })
        })
        .collect()
}

/// Fires when reward and quality both clear their thresholds and both moved
/// by at most `epsilon` since the previous episode.
pub fn early_stop(r_t: f64, c_t: f64, r_prev: f64, c_prev: f64, config: &EarlyStopConfig) -> bool {
    r_t >= config.r_th
        && c_t >= config.c_target
        && (r_t - r_prev).abs() <= config.epsilon
        && (c_t - c_prev).abs() <= config.epsilon
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Collect rollouts on the rayon pool. Results are identical either way
    /// because every rollout owns its random stream.
    pub parallel: bool,
    /// Checked between episodes; when set, training returns what it has.
    pub interrupt: Option<Arc<AtomicBool>>,
    /// Start from these networks instead of a fresh initialization.
    pub initial_policies: Option<Vec<PolicyNet>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub policies: Vec<PolicyNet>,
    pub curve: Vec<CurvePoint>,
    pub episodes_run: usize,
    pub stopped_early: bool,
    pub interrupted: bool,
    /// Mean realized score per agent in the last episode (empty if none ran).
    pub final_scores: Vec<f64>,
}

fn initial_policies(config: &TrainerConfig, seed: u64) -> Vec<PolicyNet> {
    (0..config.game.n)
        .map(|i| {
            let mut rng = stream_rng(seed, DOMAIN_INIT, i as u64);
            PolicyNet::new(config.belief.total(), config.hidden, config.init_std, &mut rng)
        })
        .collect()
}

pub fn train(
    env: &SyntheticEnv,
    config: &TrainerConfig,
    seed: u64,
    options: &TrainOptions,
) -> Result<TrainOutcome, RlError> {
    config.validate()?;
    let n = config.game.n;
    if env.c_min != config.game.c_min || env.c_max != config.game.c_max {
        return Err(RlError::Config(
            "environment score range must equal the game's contribution range".into(),
        ));
    }
    let mut policies = match &options.initial_policies {
        Some(p) => {
            let width = config.belief.total();
            if p.len() != n || p.iter().any(|net| net.input != width) {
                return Err(RlError::Config("initial policies do not match the configuration".into()));
            }
            p.clone()
        }
        None => initial_policies(config, seed),
    };
    let mut optimizers: Vec<Adam> = policies
        .iter()
        .map(|p| Adam::new(p.params.len(), config.learning_rate))
        .collect();
    let mut context = RolloutContext::fresh(n, config.belief, env.task_seed);
    let t_max = config.early_stop.t_max;
    let mut curve: Vec<CurvePoint> = Vec::with_capacity(t_max);
    let mut outcome_flags = (false, false);
    let mut final_scores = Vec::new();

    for episode in 1..=t_max {
        if options.interrupt.as_ref().is_some_and(|f| f.load(Ordering::Relaxed)) {
            outcome_flags.1 = true;
            break;
        }
        context.progress = (episode - 1) as f64 / t_max as f64;
        let base = (episode as u64 - 1) * config.buffer_size as u64;
        let run = |k: usize| -> Result<(Trajectory, Vec<RewardSignal>), RlError> {
            let mut rng = stream_rng(seed, DOMAIN_ROLLOUT, base + k as u64);
            let traj = rollout_episode(env, &policies, &context, &mut rng)?;
            let signals = compute_rewards(&traj, &config.game)?;
            Ok((traj, signals))
        };
        let rollouts: Vec<(Trajectory, Vec<RewardSignal>)> = if options.parallel {
            (0..config.buffer_size).into_par_iter().map(run).collect::<Result<_, _>>()?
        } else {
            (0..config.buffer_size).map(run).collect::<Result<_, _>>()?
        };

        let mut buffers: Vec<Vec<Transition>> = vec![Vec::with_capacity(config.buffer_size); n];
        let mut reward_sum = vec![0.0; n];
        let mut score_sum = vec![0.0; n];
        for (traj, signals) in rollouts {
            for (i, (step, sig)) in traj.steps.into_iter().zip(signals).enumerate() {
                reward_sum[i] += sig.reward;
                score_sum[i] += step.score;
                buffers[i].push(Transition {
                    belief: step.belief,
                    raw_action: step.action.raw,
                    logprob_old: step.action.logprob,
                    advantage: sig.advantage,
                    reward: sig.reward,
                });
            }
        }
        let m = config.buffer_size as f64;
        let mean_reward = reward_sum.iter().sum::<f64>() / (m * n as f64);
        let mean_quality = score_sum.iter().sum::<f64>() / (m * n as f64);
        final_scores = score_sum.iter().map(|s| s / m).collect();

        let (mut loss, mut kl) = (0.0, 0.0);
        for (i, buffer) in buffers.into_iter().enumerate() {
            let mut rng = stream_rng(seed, DOMAIN_UPDATE, (episode as u64 - 1) * n as u64 + i as u64);
            let stats = ppo_update(&mut policies[i], &mut optimizers[i], buffer, config, &mut rng)?;
            loss += stats.final_loss / n as f64;
            kl += stats.final_kl / n as f64;
        }
        for (i, a) in context.agents.iter_mut().enumerate() {
            *a = AgentStats {
                mean_reward: reward_sum[i] / m,
                mean_score: score_sum[i] / m,
            };
        }
        curve.push(CurvePoint {
            episode,
            mean_reward,
            mean_quality,
            loss,
            kl,
        });
        if let [.., prev, last] = curve.as_slice() {
            if early_stop(
                last.mean_reward,
                last.mean_quality,
                prev.mean_reward,
                prev.mean_quality,
                &config.early_stop,
            ) {
                outcome_flags.0 = true;
                break;
            }
        }
    }
    Ok(TrainOutcome {
        policies,
        episodes_run: curve.len(),
        curve,
        stopped_early: outcome_flags.0,
        interrupted: outcome_flags.1,
        final_scores,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub seed: u64,
    pub episodes_run: usize,
    pub config: TrainerConfig,
    pub env: SyntheticEnv,
    pub policies: Vec<PolicyNet>,
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<(), RlError> {
    let err = |message: String| RlError::Checkpoint {
        path: path.to_path_buf(),
        message,
    };
    let text = serde_json::to_string(checkpoint).map_err(|e| err(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| err(e.to_string()))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, RlError> {
    let err = |message: String| RlError::Checkpoint {
        path: path.to_path_buf(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
    if ck.version != CHECKPOINT_VERSION {
        return Err(err(format!(
            "unsupported version {} (expected {CHECKPOINT_VERSION})",
            ck.version
        )));
    }
    Ok(ck)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn early_stop_examples() {
        let cfg = EarlyStopConfig {
            r_th: 0.8,
            c_target: 0.85,
            epsilon: 0.01,
            t_max: 10,
        };
        assert!(early_stop(0.9, 0.9, 0.895, 0.9, &cfg));
        assert!(!early_stop(0.9, 0.8, 0.9, 0.8, &cfg));
        assert!(!early_stop(0.9, 0.9, 0.5, 0.9, &cfg));
    }

    #[test]
    fn stream_rngs_are_independent_of_visit_order() {
        let a: u64 = stream_rng(5, DOMAIN_ROLLOUT, 7).gen();
        let _ = stream_rng(5, DOMAIN_ROLLOUT, 3).gen::<u64>();
        let b: u64 = stream_rng(5, DOMAIN_ROLLOUT, 7).gen();
        assert_eq!(a, b);
        assert_ne!(a, stream_rng(5, DOMAIN_UPDATE, 7).gen::<u64>());
    }
}
