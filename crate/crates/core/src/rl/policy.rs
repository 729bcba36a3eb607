//! Actor-critic network with one shared tanh layer.
//!
//! Parameters live in one flat vector, laid out as
//! `[W1 (hidden x input), b1, Wmean (A x hidden), bmean, Wstd, bstd, wvalue, bvalue]`.
//! Standard deviations are `STD_FLOOR + softplus(z)`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::env::{ConfigVector, ACTION_DIM};
use crate::error::RlError;

pub const STD_FLOOR: f64 = 1e-3;
const LN_2PI: f64 = 1.837_877_066_409_345_3;

pub fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Log-density of a diagonal Gaussian.
pub fn gaussian_log_prob(x: &[f64], mean: &[f64], std: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .zip(std)
        .map(|((x, m), s)| {
            let d = (x - m) / s;
            -0.5 * d * d - s.ln() - 0.5 * LN_2PI
        })
        .sum()
}

/// Differential entropy of a diagonal Gaussian.
pub fn gaussian_entropy(std: &[f64]) -> f64 {
    std.iter().map(|s| 0.5 * (LN_2PI + 1.0) + s.ln()).sum()
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub hidden: Vec<f64>,
    pub mean: [f64; ACTION_DIM],
    pub std_pre: [f64; ACTION_DIM],
    pub std: [f64; ACTION_DIM],
    pub value: f64,
}

impl Forward {
    pub fn new(hidden: usize) -> Self {
        Self {
            hidden: vec![0.0; hidden],
            mean: [0.0; ACTION_DIM],
            std_pre: [0.0; ACTION_DIM],
            std: [0.0; ACTION_DIM],
            value: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyNet {
    pub input: usize,
    pub hidden: usize,
    pub params: Vec<f64>,
}

struct Layout {
    b1: usize,
    wm: usize,
    bm: usize,
    ws: usize,
    bs: usize,
    wv: usize,
    bv: usize,
    len: usize,
}

impl PolicyNet {
    fn layout(input: usize, hidden: usize) -> Layout {
        let b1 = hidden * input;
        let wm = b1 + hidden;
        let bm = wm + ACTION_DIM * hidden;
        let ws = bm + ACTION_DIM;
        let bs = ws + ACTION_DIM * hidden;
        let wv = bs + ACTION_DIM;
        let bv = wv + hidden;
        Layout {
            b1,
            wm,
            bm,
            ws,
            bs,
            wv,
            bv,
            len: bv + 1,
        }
    }

    pub fn param_count(input: usize, hidden: usize) -> usize {
        Self::layout(input, hidden).len
    }

    /// Scaled Gaussian initialization with small output heads and an initial
    /// standard deviation of `init_std` on every action dimension.
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: usize, init_std: f64, rng: &mut R) -> Self {
        let l = Self::layout(input, hidden);
        let mut params = vec![0.0; l.len];
        let mut normal = |scale: f64| -> f64 {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        };
        let in_scale = 1.0 / (input.max(1) as f64).sqrt();
        for p in &mut params[..l.b1] {
            *p = normal(in_scale);
        }
        for p in &mut params[l.wm..l.bm] {
            *p = normal(0.01);
        }
        for p in &mut params[l.ws..l.bs] {
            *p = normal(0.01);
        }
        for p in &mut params[l.wv..l.bv] {
            *p = normal(0.01);
        }
        let target = (init_std - STD_FLOOR).max(1e-6);
        let bias = target.exp_m1().ln();
        for p in &mut params[l.bs..l.wv] {
            *p = bias;
        }
        Self { input, hidden, params }
    }

    pub fn forward(&self, x: &[f64], out: &mut Forward) {
        let l = Self::layout(self.input, self.hidden);
        let p = &self.params;
        out.hidden.resize(self.hidden, 0.0);
        for j in 0..self.hidden {
            let row = &p[j * self.input..(j + 1) * self.input];
            let mut acc = p[l.b1 + j];
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            out.hidden[j] = acc.tanh();
        }
        let h = &out.hidden;
        let dot = |off: usize| -> f64 { p[off..off + self.hidden].iter().zip(h).map(|(w, h)| w * h).sum() };
        for k in 0..ACTION_DIM {
            out.mean[k] = dot(l.wm + k * self.hidden) + p[l.bm + k];
            out.std_pre[k] = dot(l.ws + k * self.hidden) + p[l.bs + k];
            out.std[k] = STD_FLOOR + softplus(out.std_pre[k]);
        }
        out.value = dot(l.wv) + p[l.bv];
    }

    pub fn evaluate(&self, x: &[f64]) -> Forward {
        let mut f = Forward::new(self.hidden);
        self.forward(x, &mut f);
        f
    }

    /// Adds the parameter gradient implied by `dL/dmean`, `dL/dstd` and
    /// `dL/dvalue` at forward state `f` to `grad`.
    pub fn backward(
        &self,
        x: &[f64],
        f: &Forward,
        g_mean: &[f64; ACTION_DIM],
        g_std: &[f64; ACTION_DIM],
        g_value: f64,
        grad: &mut [f64],
    ) {
        let l = Self::layout(self.input, self.hidden);
        let p = &self.params;
        let g_pre: [f64; ACTION_DIM] = std::array::from_fn(|k| g_std[k] * sigmoid(f.std_pre[k]));
        for j in 0..self.hidden {
            let hj = f.hidden[j];
            let mut gh = g_value * p[l.wv + j];
            grad[l.wv + j] += g_value * hj;
            for k in 0..ACTION_DIM {
                let im = l.wm + k * self.hidden + j;
                let is = l.ws + k * self.hidden + j;
                gh += g_mean[k] * p[im] + g_pre[k] * p[is];
                grad[im] += g_mean[k] * hj;
                grad[is] += g_pre[k] * hj;
            }
            let ga = gh * (1.0 - hj * hj);
            if ga != 0.0 {
                let row = &mut grad[j * self.input..(j + 1) * self.input];
                for (g, xi) in row.iter_mut().zip(x) {
                    *g += ga * xi;
                }
            }
            grad[l.b1 + j] += ga;
        }
        for k in 0..ACTION_DIM {
            grad[l.bm + k] += g_mean[k];
            grad[l.bs + k] += g_pre[k];
        }
        grad[l.bv] += g_value;
    }
}

/// An action drawn from the policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionSample {
    /// Unsquashed Gaussian draw.
    pub raw: [f64; ACTION_DIM],
    /// `raw` clamped to `[-1, 1]`.
    pub normalized: [f64; ACTION_DIM],
    pub config: ConfigVector,
    /// Log-density of `raw` under the pre-squash Gaussian.
    pub logprob: f64,
    pub value: f64,
}

pub fn sample_action<R: Rng + ?Sized>(
    policy: &PolicyNet,
    belief: &[f64],
    rng: &mut R,
) -> Result<ActionSample, RlError> {
    let f = policy.evaluate(belief);
    if f.mean.iter().chain(&f.std).any(|x| !x.is_finite()) || !f.value.is_finite() {
        return Err(RlError::NonFinite("policy output"));
    }
    let raw: [f64; ACTION_DIM] = std::array::from_fn(|k| {
        let z: f64 = StandardNormal.sample(rng);
        f.mean[k] + f.std[k] * z
    });
    let normalized = raw.map(|x| x.clamp(-1.0, 1.0));
    Ok(ActionSample {
        raw,
        normalized,
        config: ConfigVector::from_normalized(&normalized),
        logprob: gaussian_log_prob(&raw, &f.mean, &f.std),
        value: f.value,
    })
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

/// Scales `grad` so its Euclidean norm is at most `max_norm`; returns the
/// norm before scaling.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn initial_std_and_positivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = PolicyNet::new(5, 8, 0.5, &mut rng);
        let f = net.evaluate(&[0.1, -0.2, 0.3, 0.0, 1.0]);
        for s in f.std {
            assert!((s - 0.5).abs() < 0.05);
        }
        let mut collapsed = net.clone();
        let l = PolicyNet::layout(5, 8);
        collapsed.params[l.bs..l.wv].iter_mut().for_each(|b| *b = -1e3);
        let f = collapsed.evaluate(&[0.0; 5]);
        assert!(f.std.iter().all(|s| *s >= STD_FLOOR));
    }

    #[test]
    fn sampling_is_deterministic_and_logprob_matches_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = PolicyNet::new(4, 6, 0.3, &mut rng);
        let b = [0.2, 0.4, -0.1, 0.9];
        let a = sample_action(&net, &b, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let c = sample_action(&net, &b, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, c);
        let f = net.evaluate(&b);
        let mut density = 1.0;
        for k in 0..ACTION_DIM {
            let s = f.std[k];
            density *= (-(a.raw[k] - f.mean[k]).powi(2) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
        }
        assert!((a.logprob - density.ln()).abs() < 1e-10);
    }

    #[test]
    fn adam_moves_against_gradient() {
        let mut p = vec![1.0, -1.0];
        let mut opt = Adam::new(2, 0.1);
        opt.step(&mut p, &[2.0, -3.0]);
        assert!((p[0] - 0.9).abs() < 1e-9 && (p[1] + 0.9).abs() < 1e-9);
    }

    #[test]
    fn clipping_caps_norm() {
        let mut g = vec![3.0, 4.0];
        assert_eq!(clip_grad_norm(&mut g, 0.5), 5.0);
        assert!((g[0] - 0.3).abs() < 1e-12 && (g[1] - 0.4).abs() < 1e-12);
    }
}
