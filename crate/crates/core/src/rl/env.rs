//! Synthetic sequential-contribution environment.
//!
//! Actions are six normalized coordinates in `[-1, 1]`, one per generation
//! setting. A response surface maps them (and the visible score history) to a
//! quality score; the cost is either proportional to the max-tokens setting or
//! a [`CostModel`] of the score.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::RlError;
use crate::game::CostModel;

pub const ACTION_DIM: usize = 6;
/// Index of the max-tokens coordinate.
pub const MAX_TOKENS: usize = 3;

/// `(name, low, high)` of each setting.
pub const CONFIG_BOXES: [(&str, f64, f64); ACTION_DIM] = [
    ("temperature", 0.1, 2.0),
    ("top_p", 0.1, 1.0),
    ("top_k", 1.0, 100.0),
    ("max_tokens", 64.0, 2048.0),
    ("repetition_penalty", 1.0, 2.0),
    ("presence_penalty", -2.0, 2.0),
];

/// Generation settings inside their boxes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigVector {
    pub temperature: f64,
    pub top_p: f64,
    pub top_k: f64,
    pub max_tokens: f64,
    pub repetition_penalty: f64,
    pub presence_penalty: f64,
}

impl ConfigVector {
    /// Maps a normalized action (clamped to `[-1, 1]`) into the boxes.
    pub fn from_normalized(a: &[f64; ACTION_DIM]) -> Self {
        let v: [f64; ACTION_DIM] = std::array::from_fn(|k| {
            let (_, lo, hi) = CONFIG_BOXES[k];
            lo + (hi - lo) * (a[k].clamp(-1.0, 1.0) + 1.0) / 2.0
        });
        Self {
            temperature: v[0],
            top_p: v[1],
            top_k: v[2],
            max_tokens: v[3],
            repetition_penalty: v[4],
            presence_penalty: v[5],
        }
    }

    pub fn to_array(&self) -> [f64; ACTION_DIM] {
        [
            self.temperature,
            self.top_p,
            self.top_k,
            self.max_tokens,
            self.repetition_penalty,
            self.presence_penalty,
        ]
    }

    /// Inverse of [`ConfigVector::from_normalized`].
    pub fn to_normalized(&self) -> [f64; ACTION_DIM] {
        let v = self.to_array();
        std::array::from_fn(|k| {
            let (_, lo, hi) = CONFIG_BOXES[k];
            2.0 * (v[k] - lo) / (hi - lo) - 1.0
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HistoryAggregation {
    /// Only the immediate predecessor's score.
    #[default]
    Predecessor,
    /// Mean of all visible earlier scores.
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Surface {
    /// `clamp(c_min + range * sigmoid(w . a) + synergy * h)` where `h`
    /// aggregates the visible history.
    Sigmoid {
        weights: [f64; ACTION_DIM],
        synergy: f64,
        aggregation: HistoryAggregation,
    },
    /// Score affine in one coordinate: `c_min + range * (a_k + 1) / 2`.
    Linear { coordinate: usize },
    /// A fixed score, not clamped (useful for contract tests).
    Constant { value: f64 },
}

impl Surface {
    /// Sigmoid surface with seeded weights whose absolute values sum to 6,
    /// the max-tokens weight forced positive.
    pub fn seeded_sigmoid(seed: u64, synergy: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w: [f64; ACTION_DIM] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        w[MAX_TOKENS] = w[MAX_TOKENS].abs();
        let total: f64 = w.iter().map(|x| x.abs()).sum();
        w.iter_mut().for_each(|x| *x *= ACTION_DIM as f64 / total);
        Surface::Sigmoid {
            weights: w,
            synergy,
            aggregation: HistoryAggregation::Predecessor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvCost {
    /// `kappa * (normalized max-tokens in [0, 1])`.
    MaxTokens { kappa: f64 },
    /// A cost of the realized score.
    Score { model: CostModel },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "UPPERCASE")]
pub enum ObservationMode {
    /// Each agent sees its predecessor's score only.
    #[default]
    #[serde(alias = "po")]
    Po,
    /// Each agent sees the full score history.
    #[serde(alias = "fo")]
    Fo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticEnv {
    pub surface: Surface,
    pub cost: EnvCost,
    pub mode: ObservationMode,
    pub c_min: f64,
    pub c_max: f64,
    pub task_seed: u64,
}

impl Default for SyntheticEnv {
    fn default() -> Self {
        Self {
            surface: Surface::seeded_sigmoid(0, 0.0),
            cost: EnvCost::MaxTokens { kappa: 1.0 },
            mode: ObservationMode::Po,
            c_min: 0.0,
            c_max: 1.0,
            task_seed: 0,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl SyntheticEnv {
    /// Score for normalized action `a` given all earlier scores. Under PO only
    /// the last entry of `history` is visible.
    pub fn score(&self, a: &[f64; ACTION_DIM], history: &[f64]) -> Result<f64, RlError> {
        let visible = self.visible(history);
        let range = self.c_max - self.c_min;
        let a: [f64; ACTION_DIM] = std::array::from_fn(|k| a[k].clamp(-1.0, 1.0));
        let c = match &self.surface {
            Surface::Sigmoid {
                weights,
                synergy,
                aggregation,
            } => {
                let z: f64 = weights.iter().zip(&a).map(|(w, x)| w * x).sum();
                let h = match aggregation {
                    HistoryAggregation::Predecessor => visible.last().copied().unwrap_or(0.0),
                    HistoryAggregation::Mean if visible.is_empty() => 0.0,
                    HistoryAggregation::Mean => visible.iter().sum::<f64>() / visible.len() as f64,
                };
                (self.c_min + range * sigmoid(z) + synergy * h).clamp(self.c_min, self.c_max)
            }
            Surface::Linear { coordinate } => {
                let x = a.get(*coordinate).copied().unwrap_or(0.0);
                self.c_min + range * (x + 1.0) / 2.0
            }
            Surface::Constant { value } => *value,
        };
        if !c.is_finite() || c < self.c_min || c > self.c_max {
            return Err(RlError::EnvContract {
                score: c,
                c_min: self.c_min,
                c_max: self.c_max,
            });
        }
        Ok(c)
    }

    /// Part of the history the acting agent observes.
    pub fn visible<'h>(&self, history: &'h [f64]) -> &'h [f64] {
        match self.mode {
            ObservationMode::Fo => history,
            ObservationMode::Po => &history[history.len().saturating_sub(1)..],
        }
    }

    /// Cheapest cost of each score as a [`CostModel`], i.e. the cost function
    /// of the stage game the agents play. `None` when the surface makes the
    /// score depend on history or the induced cost has no closed form here.
    pub fn stage_cost(&self) -> Option<CostModel> {
        let range = self.c_max - self.c_min;
        match (&self.surface, self.cost) {
            (_, EnvCost::Score { model }) => Some(model),
            (Surface::Linear { coordinate }, EnvCost::MaxTokens { kappa }) if *coordinate == MAX_TOKENS => {
                Some(CostModel::Linear { a: kappa / range })
            }
            (
                Surface::Sigmoid {
                    weights, synergy, ..
                },
                EnvCost::MaxTokens { kappa },
            ) if *synergy == 0.0 && weights[MAX_TOKENS] > 0.0 && self.c_min == 0.0 && self.c_max == 1.0 => {
                let w = weights[MAX_TOKENS];
                let free: f64 = weights
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != MAX_TOKENS)
                    .map(|(_, x)| x.abs())
                    .sum();
                Some(CostModel::InverseSigmoid {
                    kappa,
                    weight: w,
                    free_logit: free - w,
                })
            }
            _ => None,
        }
    }

    pub fn cost(&self, a: &[f64; ACTION_DIM], score: f64) -> f64 {
        match self.cost {
            EnvCost::MaxTokens { kappa } => kappa * (a[MAX_TOKENS].clamp(-1.0, 1.0) + 1.0) / 2.0,
            EnvCost::Score { model } => model.cost(score),
        }
    }
}
