//! Data-uncertainty loss for a binary density network.
//!
//! The network predicts logit means `mu(x)` and a raw scale `s(x)`; the noise
//! scale is `sigma(x) = exp(s(x))`, shared by both logits. Noisy logits are
//! drawn with the reparameterization `u = mu + sigma * eps`, `eps ~ N(0, I)`,
//! the class probability is estimated as the Monte-Carlo mean of
//! `softmax(u)`, and the loss is the cross-entropy of the label under that
//! mean. Gradients are pathwise: the noise draws are frozen by the seed and
//! the derivative flows through `u`.
//!
//! For two classes `softmax(u)_1 = sigmoid(mu_c + sigma * (eps_1 - eps_2))`
//! with `mu_c = mu_1 - mu_2`. Because the sigmoid is concave for positive
//! arguments, averaging over the noise pulls confident predictions toward
//! 1/2, more so for larger `sigma` and less so for larger `mu_c`.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::metrics::{clamp_probability, PROB_FLOOR};
use crate::nn::{sigmoid, softmax2};
use crate::seed;

/// Default number of noise draws per sample during training.
pub const DEFAULT_K_TRAIN: usize = 32;
/// Default number of noise draws per sample at evaluation.
pub const DEFAULT_K_EVAL: usize = 256;

/// Raw density-head output for one input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOutput {
    pub mu: [f64; 2],
    pub s_raw: f64,
}

impl DensityOutput {
    pub fn new(mu: [f64; 2], s_raw: f64) -> Self {
        Self { mu, s_raw }
    }

    /// Split a raw network output `(mu_1, mu_2, s)`.
    pub fn from_raw(raw: &[f64]) -> Result<Self> {
        match raw {
            [a, b, s] => Ok(Self::new([*a, *b], *s)),
            _ => Err(Error::invalid(format!(
                "density output needs 3 raw values, got {}",
                raw.len()
            ))),
        }
    }

    pub fn sigma(&self) -> f64 {
        self.s_raw.exp()
    }
}

/// Monte-Carlo sampling settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MCConfig {
    pub k: usize,
    pub seed: u64,
    /// Pair every draw `eps` with `-eps`.
    pub antithetic: bool,
}

impl MCConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            antithetic: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("Monte-Carlo sample count must be at least 1"));
        }
        Ok(())
    }
}

/// The `k` standard-normal noise pairs selected by `mc`. With antithetic
/// sampling, draws come in `(eps, -eps)` pairs; an odd `k` ends with one
/// unpaired draw.
pub fn draw_noise(mc: &MCConfig) -> Result<Vec<[f64; 2]>> {
    mc.validate()?;
    let mut rng = seed::stream(mc.seed, &[]);
    let mut draw = || -> [f64; 2] {
        [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)]
    };
    let mut out = Vec::with_capacity(mc.k);
    if mc.antithetic {
        for _ in 0..mc.k / 2 {
            let e = draw();
            out.push(e);
            out.push([-e[0], -e[1]]);
        }
        if mc.k % 2 == 1 {
            out.push(draw());
        }
    } else {
        out.extend((0..mc.k).map(|_| draw()));
    }
    Ok(out)
}

/// Reparameterized logits `u = mu + sigma * eps`.
#[inline]
pub fn sample_logits(out: &DensityOutput, eps: [f64; 2]) -> [f64; 2] {
    let sigma = out.sigma();
    [out.mu[0] + sigma * eps[0], out.mu[1] + sigma * eps[1]]
}

/// Mean of `softmax(u)` over the given noise draws.
pub fn expected_prob_with_noise(out: &DensityOutput, noise: &[[f64; 2]]) -> [f64; 2] {
    let mut acc = [0.0, 0.0];
    for &eps in noise {
        let p = softmax2(sample_logits(out, eps));
        acc[0] += p[0];
        acc[1] += p[1];
    }
    let k = noise.len() as f64;
    [acc[0] / k, acc[1] / k]
}

/// Monte-Carlo estimate of `E[softmax(u)]`.
pub fn expected_prob(out: &DensityOutput, mc: &MCConfig) -> Result<[f64; 2]> {
    Ok(expected_prob_with_noise(out, &draw_noise(mc)?))
}

/// Cross-entropy of label `y` under the Monte-Carlo mean probability.
pub fn du_loss(out: &DensityOutput, y: usize, mc: &MCConfig) -> Result<f64> {
    check_label(y)?;
    let p = expected_prob(out, mc)?;
    Ok(-clamp_probability(p[y]).ln())
}

/// Loss and its pathwise gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuGradient {
    pub loss: f64,
    pub d_mu: [f64; 2],
    pub d_s_raw: f64,
}

/// Loss and pathwise gradient w.r.t. `mu` and `s_raw`, holding the noise
/// draws selected by `mc` fixed.
pub fn du_loss_grad(out: &DensityOutput, y: usize, mc: &MCConfig) -> Result<DuGradient> {
    check_label(y)?;
    Ok(du_loss_grad_with_noise(out, y, &draw_noise(mc)?))
}

pub(crate) fn du_loss_grad_with_noise(
    out: &DensityOutput,
    y: usize,
    noise: &[[f64; 2]],
) -> DuGradient {
    let sigma = out.sigma();
    let probs: Vec<[f64; 2]> = noise
        .iter()
        .map(|&eps| softmax2(sample_logits(out, eps)))
        .collect();
    let k = noise.len() as f64;
    let mean_y = probs.iter().map(|p| p[y]).sum::<f64>() / k;
    let loss = -clamp_probability(mean_y).ln();
    if mean_y < PROB_FLOOR {
        // clamped: the loss is locally constant
        return DuGradient {
            loss,
            d_mu: [0.0, 0.0],
            d_s_raw: 0.0,
        };
    }
    // dL/du_kj = -(1 / (K mean_y)) * p_ky (delta_yj - p_kj)
    let scale = -1.0 / (k * mean_y);
    let mut d_mu = [0.0, 0.0];
    let mut d_s_raw = 0.0;
    for (p, eps) in probs.iter().zip(noise) {
        for j in 0..2 {
            let delta = if j == y { 1.0 } else { 0.0 };
            let du = scale * p[y] * (delta - p[j]);
            d_mu[j] += du;
            d_s_raw += du * sigma * eps[j];
        }
    }
    DuGradient {
        loss,
        d_mu,
        d_s_raw,
    }
}

fn check_label(y: usize) -> Result<()> {
    if y > 1 {
        return Err(Error::invalid(format!("label {y} not in {{0,1}}")));
    }
    Ok(())
}

/// Probability of class 1 from two sampled logits, as `sigmoid(u1 - u2)`.
#[inline]
pub fn binary_collapse(u1: f64, u2: f64) -> f64 {
    sigmoid(u1 - u2)
}

/// The same probability in its softmax form `exp(u1) / (exp(u1) + exp(u2))`,
/// computed with the larger logit factored out.
pub fn binary_softmax_form(u1: f64, u2: f64) -> f64 {
    let m = u1.max(u2);
    let e1 = (u1 - m).exp();
    let e2 = (u2 - m).exp();
    e1 / (e1 + e2)
}

/// One-dimensional view of a two-logit density output: the first class
/// probability of every draw is `sigmoid(mu_c + sigma * eps_c)` with
/// `eps_c = eps_1 - eps_2 ~ N(0, 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryCollapse {
    /// `mu_1 - mu_2`.
    pub mu_c: f64,
    /// Per-logit noise scale.
    pub sigma: f64,
    /// Standard deviation of `sigma * eps_c`, i.e. `sigma * sqrt(2)`.
    pub sigma_c: f64,
}

impl BinaryCollapse {
    pub fn from_density(out: &DensityOutput) -> Self {
        let sigma = out.sigma();
        Self {
            mu_c: out.mu[0] - out.mu[1],
            sigma,
            sigma_c: sigma * std::f64::consts::SQRT_2,
        }
    }

    /// First-class probability for one noise pair.
    pub fn p1(&self, eps: [f64; 2]) -> f64 {
        sigmoid(self.mu_c + self.sigma * (eps[0] - eps[1]))
    }

    /// First-class probability for a standardized collapsed draw `z ~ N(0, 1)`.
    pub fn p1_standard(&self, z: f64) -> f64 {
        sigmoid(self.mu_c + self.sigma_c * z)
    }
}
