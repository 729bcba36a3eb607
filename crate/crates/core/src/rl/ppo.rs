//! Clipped PPO loss, its analytic gradient, and the minibatch update loop.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::env::ACTION_DIM;
use super::policy::{clip_grad_norm, gaussian_entropy, gaussian_log_prob, Adam, Forward, PolicyNet};
use super::TrainerConfig;
use crate::error::RlError;

/// One agent decision kept for the update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub belief: Vec<f64>,
    /// Unsquashed action the log-probability refers to.
    pub raw_action: [f64; ACTION_DIM],
    pub logprob_old: f64,
    pub advantage: f64,
    /// Regression target of the critic.
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// `mean(logp_old - logp_new)`.
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad: Vec<f64>,
}

/// Per-sample clipped surrogate `min(r A, clip(r, 1-eps, 1+eps) A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - clip, 1.0 + clip) * advantage)
}

/// Importance ratios `pi(a|b) / pi_old(a|b)` for every sample.
pub fn importance_ratios(policy: &PolicyNet, batch: &[Transition]) -> Vec<f64> {
    let mut f = Forward::new(policy.hidden);
    batch
        .iter()
        .map(|t| {
            policy.forward(&t.belief, &mut f);
            (gaussian_log_prob(&t.raw_action, &f.mean, &f.std) - t.logprob_old).exp()
        })
        .collect()
}

/// Loss (to be minimized) and gradient over `batch`:
/// `-mean(surrogate) + value_coef * mean((V - R)^2) - entropy_coef * mean(H)`.
pub fn ppo_loss(policy: &PolicyNet, batch: &[Transition], config: &TrainerConfig) -> Result<LossOutput, RlError> {
    let refs: Vec<&Transition> = batch.iter().collect();
    loss_over(policy, &refs, config)
}

pub(crate) fn loss_over(
    policy: &PolicyNet,
    batch: &[&Transition],
    config: &TrainerConfig,
) -> Result<LossOutput, RlError> {
    if batch.is_empty() {
        return Err(RlError::Config("empty PPO batch".into()));
    }
    let m = batch.len() as f64;
    let entropy_coef = if config.entropy_bonus { config.entropy_coef } else { 0.0 };
    let mut grad = vec![0.0; policy.params.len()];
    let mut f = Forward::new(policy.hidden);
    let (mut policy_loss, mut value_loss, mut entropy, mut kl, mut clipped) = (0.0, 0.0, 0.0, 0.0, 0usize);
    for t in batch {
        policy.forward(&t.belief, &mut f);
        let logp = gaussian_log_prob(&t.raw_action, &f.mean, &f.std);
        let ratio = (logp - t.logprob_old).exp();
        let a = t.advantage;
        let unclipped = ratio * a;
        let clipped_term = ratio.clamp(1.0 - config.clip, 1.0 + config.clip) * a;
        policy_loss -= unclipped.min(clipped_term) / m;
        // the gradient flows only through the unclipped branch when it is the minimum
        let g_logp = if unclipped <= clipped_term { -ratio * a / m } else { 0.0 };
        if unclipped > clipped_term {
            clipped += 1;
        }
        let h = gaussian_entropy(&f.std);
        entropy += h / m;
        kl += (t.logprob_old - logp) / m;
        let diff = f.value - t.reward;
        value_loss += diff * diff / m;

        let mut g_mean = [0.0; ACTION_DIM];
        let mut g_std = [0.0; ACTION_DIM];
        for k in 0..ACTION_DIM {
            let s = f.std[k];
            let d = t.raw_action[k] - f.mean[k];
            g_mean[k] = g_logp * d / (s * s);
            g_std[k] = g_logp * (d * d / (s * s * s) - 1.0 / s) - entropy_coef / (m * s);
        }
        let g_value = 2.0 * config.value_coef * diff / m;
        policy.backward(&t.belief, &f, &g_mean, &g_std, g_value, &mut grad);
    }
    let loss = policy_loss + config.value_coef * value_loss - entropy_coef * entropy;
    if !loss.is_finite() {
        return Err(RlError::NonFinite("PPO loss"));
    }
    Ok(LossOutput {
        loss,
        policy_loss,
        value_loss,
        entropy,
        approx_kl: kl,
        clip_fraction: clipped as f64 / m,
        grad,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    /// Epochs entered, including one cut short by the KL guard.
    pub epochs_run: usize,
    pub optimizer_steps: usize,
    pub stopped_by_kl: bool,
    /// Approximate KL of the last evaluated minibatch.
    pub final_kl: f64,
    /// Mean loss over the minibatches evaluated in the last epoch.
    pub final_loss: f64,
    /// Mean value loss per epoch.
    pub value_losses: Vec<f64>,
}

/// Per-buffer advantage normalization with a standard-deviation floor.
pub fn normalize_advantages(buffer: &mut [Transition]) {
    if buffer.is_empty() {
        return;
    }
    let n = buffer.len() as f64;
    let mean = buffer.iter().map(|t| t.advantage).sum::<f64>() / n;
    let var = buffer.iter().map(|t| (t.advantage - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    buffer.iter_mut().for_each(|t| t.advantage = (t.advantage - mean) / std);
}

/// Runs up to `ppo_epochs` passes of shuffled minibatches over `buffer`.
/// Before each step the minibatch KL is checked; reaching `target_kl` ends the
/// update without taking that step.
pub fn ppo_update<R: Rng + ?Sized>(
    policy: &mut PolicyNet,
    optimizer: &mut Adam,
    mut buffer: Vec<Transition>,
    config: &TrainerConfig,
    rng: &mut R,
) -> Result<UpdateStats, RlError> {
    if buffer.is_empty() {
        return Err(RlError::Config("empty PPO buffer".into()));
    }
    normalize_advantages(&mut buffer);
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    let mut stats = UpdateStats {
        epochs_run: 0,
        optimizer_steps: 0,
        stopped_by_kl: false,
        final_kl: 0.0,
        final_loss: 0.0,
        value_losses: Vec::new(),
    };
    'epochs: for _ in 0..config.ppo_epochs {
        stats.epochs_run += 1;
        order.shuffle(rng);
        let (mut loss_sum, mut value_sum, mut batches) = (0.0, 0.0, 0usize);
        for chunk in order.chunks(config.minibatch) {
            let batch: Vec<&Transition> = chunk.iter().map(|&i| &buffer[i]).collect();
            let mut out = loss_over(policy, &batch, config)?;
            stats.final_kl = out.approx_kl;
            loss_sum += out.loss;
            value_sum += out.value_loss;
            batches += 1;
            stats.final_loss = loss_sum / batches as f64;
            if out.approx_kl >= config.target_kl {
                stats.stopped_by_kl = true;
                stats.value_losses.push(value_sum / batches as f64);
                break 'epochs;
            }
            clip_grad_norm(&mut out.grad, config.grad_clip);
            optimizer.step(&mut policy.params, &out.grad);
            stats.optimizer_steps += 1;
        }
        stats.value_losses.push(value_sum / batches.max(1) as f64);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_arithmetic() {
        assert_eq!(clipped_surrogate(1.5, 1.0, 0.2), 1.2);
        assert_eq!(clipped_surrogate(0.5, 1.0, 0.2), 0.5);
        assert_eq!(clipped_surrogate(0.5, -1.0, 0.2), -0.8);
    }

    #[test]
    fn advantage_normalization() {
        let t = |a: f64| Transition {
            belief: vec![],
            raw_action: [0.0; ACTION_DIM],
            logprob_old: 0.0,
            advantage: a,
            reward: 0.0,
        };
        let mut b = vec![t(1.0), t(3.0)];
        normalize_advantages(&mut b);
        assert_eq!((b[0].advantage, b[1].advantage), (-1.0, 1.0));
        let mut flat = vec![t(0.0), t(0.0)];
        normalize_advantages(&mut flat);
        assert_eq!(flat[0].advantage, 0.0);
    }
}
