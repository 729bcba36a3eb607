//! Belief vectors `b_i = [task embedding; context features; position]`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PositionEncoding {
    #[default]
    OneHot,
    Sinusoidal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeliefDims {
    pub task: usize,
    pub context: usize,
    pub position: usize,
    pub encoding: PositionEncoding,
}

impl Default for BeliefDims {
    fn default() -> Self {
        Self {
            task: 16,
            context: 8,
            position: 4,
            encoding: PositionEncoding::OneHot,
        }
    }
}

impl BeliefDims {
    pub fn total(&self) -> usize {
        self.task + self.context + self.position
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub task_embedding: Vec<f64>,
    pub context_features: Vec<f64>,
    pub position_embedding: Vec<f64>,
}

impl BeliefState {
    /// The concatenated vector fed to the policy.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(
            self.task_embedding.len() + self.context_features.len() + self.position_embedding.len(),
        );
        v.extend_from_slice(&self.task_embedding);
        v.extend_from_slice(&self.context_features);
        v.extend_from_slice(&self.position_embedding);
        v
    }
}

/// Seeded pseudo-random unit vector standing in for a task encoder.
pub fn task_embedding(task_seed: u64, dim: usize) -> Vec<f64> {
    if dim == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(task_seed);
    let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    } else {
        v[0] = 1.0;
    }
    v
}

/// One-hot (wrapping past `dim`) or sinusoidal code of a zero-based position.
pub fn position_embedding(position: usize, dim: usize, encoding: PositionEncoding) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    if dim == 0 {
        return v;
    }
    match encoding {
        PositionEncoding::OneHot => v[position % dim] = 1.0,
        PositionEncoding::Sinusoidal => {
            for (k, slot) in v.iter_mut().enumerate() {
                let freq = 1.0 / 10_000f64.powf((2 * (k / 2)) as f64 / dim as f64);
                let angle = position as f64 * freq;
                *slot = if k % 2 == 0 { angle.sin() } else { angle.cos() };
            }
        }
    }
    v
}

/// Builds `b_i`. `context` is truncated or zero-padded to `dims.context`.
pub fn build_belief(task_seed: u64, context: &[f64], position: usize, dims: &BeliefDims) -> BeliefState {
    let mut context_features = vec![0.0; dims.context];
    for (slot, x) in context_features.iter_mut().zip(context) {
        *slot = *x;
    }
    BeliefState {
        task_embedding: task_embedding(task_seed, dims.task),
        context_features,
        position_embedding: position_embedding(position, dims.position, dims.encoding),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_context_is_zero_and_layout_is_fixed() {
        let dims = BeliefDims::default();
        let b = build_belief(9, &[], 1, &dims);
        assert!(b.context_features.iter().all(|x| *x == 0.0));
        assert_eq!(b.to_vec().len(), 28);
        let norm: f64 = b.task_embedding.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn positions_differ_only_in_position_block() {
        for encoding in [PositionEncoding::OneHot, PositionEncoding::Sinusoidal] {
            let dims = BeliefDims { encoding, ..BeliefDims::default() };
            let a = build_belief(3, &[0.5, 0.1], 1, &dims).to_vec();
            let b = build_belief(3, &[0.5, 0.1], 2, &dims).to_vec();
            assert_eq!(a, build_belief(3, &[0.5, 0.1], 1, &dims).to_vec());
            let split = dims.task + dims.context;
            assert_eq!(a[..split], b[..split]);
            assert_ne!(a[split..], b[split..]);
        }
    }
}
