//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the code under test except to
//! read plain data out of its types.

#![allow(dead_code)]

use calibforge::du_loss::{draw_noise, MCConfig};
use calibforge::nn::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gauss-Hermite nodes and weights for the weight function `exp(-x^2)`,
/// found by Newton iteration on the orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    const PIM4: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    x.into_iter().zip(w).collect()
}

/// `E[f(Z)]` for `Z ~ N(0, 1)` by `n`-point Gauss-Hermite quadrature.
pub fn normal_expectation(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let s: f64 = gauss_hermite(n)
        .into_iter()
        .map(|(x, w)| w * f(std::f64::consts::SQRT_2 * x))
        .sum();
    s / std::f64::consts::PI.sqrt()
}

/// Quadrature value of `E[sigmoid(mu_c + sigma * (e1 - e2))]` with
/// independent standard normal `e1, e2`.
pub fn oracle_p1(mu_c: f64, sigma: f64) -> f64 {
    let sigma_c = sigma * std::f64::consts::SQRT_2;
    normal_expectation(|z| logistic(mu_c + sigma_c * z), 150)
}

/// Monte-Carlo estimate of `E[p1]` from the library's noise stream, with a
/// standard error computed from independent antithetic pair means.
pub fn mc_p1(mu_c: f64, sigma: f64, k: usize, seed: u64) -> (f64, f64) {
    let noise = draw_noise(&MCConfig::new(k, seed)).expect("valid config");
    let f = |e: &[f64; 2]| logistic(mu_c + sigma * (e[0] - e[1]));
    let pairs: Vec<f64> = noise.chunks_exact(2).map(|c| 0.5 * (f(&c[0]) + f(&c[1]))).collect();
    let m = pairs.len() as f64;
    let mean = pairs.iter().sum::<f64>() / m;
    let var = pairs.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Metrics computed straight from their definitions.
#[derive(Debug, Clone, Copy)]
pub struct BruteMetrics {
    pub accuracy: f64,
    pub ece: f64,
    pub mce: f64,
    pub nll_sum: f64,
    pub nll_mean: f64,
}

/// Brute-force metrics of `(probabilities, true label)` pairs with `m` bins.
/// Bin `j` (1-based) holds confidences in `((j-1)/m, j/m]`; zero goes to bin 1.
pub fn brute_metrics(items: &[([f64; 2], usize)], m: usize) -> BruteMetrics {
    let n = items.len() as f64;
    let pred = |p: &[f64; 2]| if p[1] > p[0] { 1 } else { 0 };
    let correct = items.iter().filter(|(p, y)| pred(p) == *y).count() as f64;
    let mut ece = 0.0;
    let mut mce: f64 = 0.0;
    for j in 1..=m {
        let lo = (j - 1) as f64 / m as f64;
        let hi = j as f64 / m as f64;
        let members: Vec<&([f64; 2], usize)> = items
            .iter()
            .filter(|(p, _)| {
                let c = p[pred(p)];
                (c > lo && c <= hi) || (j == 1 && c == 0.0)
            })
            .collect();
        if members.is_empty() {
            continue;
        }
        let size = members.len() as f64;
        let acc = members.iter().filter(|(p, y)| pred(p) == *y).count() as f64 / size;
        let conf = members.iter().map(|(p, _)| p[pred(p)]).sum::<f64>() / size;
        ece += size / n * (acc - conf).abs();
        mce = mce.max((acc - conf).abs());
    }
    let nll_sum: f64 = items.iter().map(|(p, y)| -p[*y].max(1e-12).ln()).sum();
    BruteMetrics {
        accuracy: correct / n,
        ece,
        mce,
        nll_sum,
        nll_mean: nll_sum / n,
    }
}

/// A random prediction set of size `1..=max_n`. Some confidences are placed
/// exactly on bin edges or at 0.5 / 1.0 to exercise the boundaries.
pub fn random_prediction_set(rng: &mut ChaCha8Rng, max_n: usize, m: usize) -> Vec<([f64; 2], usize)> {
    let n = rng.random_range(1..=max_n);
    (0..n)
        .map(|_| {
            let p1 = match rng.random_range(0..10) {
                0 => rng.random_range(0..=m) as f64 / m as f64,
                1 => [0.0, 0.5, 1.0][rng.random_range(0..3)],
                _ => rng.random::<f64>(),
            };
            ([1.0 - p1, p1], rng.random_range(0..2))
        })
        .collect()
}

/// Forward pass with explicit loops: normalization, affine layers, ReLU on
/// hidden layers.
pub fn naive_forward(params: &ModelParams, x: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = match &params.input_norm {
        Some(norm) => x
            .iter()
            .zip(norm.shift.iter().zip(&norm.scale))
            .map(|(v, (s, c))| (v - s) / c)
            .collect(),
        None => x.to_vec(),
    };
    let last = params.layers.len() - 1;
    for (i, layer) in params.layers.iter().enumerate() {
        let (rows, cols) = layer.weight.dim();
        let mut z = vec![0.0; rows];
        for r in 0..rows {
            let mut acc = layer.bias[r];
            for c in 0..cols {
                acc += layer.weight[[r, c]] * a[c];
            }
            z[r] = if i < last { acc.max(0.0) } else { acc };
        }
        a = z;
    }
    a
}

/// Central finite-difference gradient of `f` at `x`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `|a - b| / max(|a|, |b|)` in the Euclidean norm; zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}
