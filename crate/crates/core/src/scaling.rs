//! Post-hoc logit scalers fit by minimizing validation NLL.
//!
//! * temperature: `softmax(z / T)` with a single `T > 0`
//! * vector: `softmax(diag(w) z)`, no bias
//! * matrix: `softmax(W z + b)`
//!
//! Temperature is fit by golden-section search over `log T` followed by a
//! few Newton steps; vector and matrix scalers use full-batch Adam started at
//! the identity.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{argmax, clamp_probability};
use crate::nn::{softmax, AdamConfig, AdamState};

pub const T_MIN: f64 = 1e-2;
pub const T_MAX: f64 = 1e2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalerKind {
    Temperature,
    Vector,
    Matrix,
}

impl ScalerKind {
    pub const ALL: [ScalerKind; 3] = [ScalerKind::Temperature, ScalerKind::Vector, ScalerKind::Matrix];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScalerKind::Temperature => "temperature",
            ScalerKind::Vector => "vector",
            ScalerKind::Matrix => "matrix",
        }
    }
}

impl std::str::FromStr for ScalerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "temperature" => Ok(ScalerKind::Temperature),
            "vector" => Ok(ScalerKind::Vector),
            "matrix" => Ok(ScalerKind::Matrix),
            other => Err(Error::invalid(format!("unknown scaler kind {other:?}"))),
        }
    }
}

/// A fitted (or hand-built) two-class scaler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScalerParams {
    Temperature {
        #[serde(rename = "T")]
        t: f64,
    },
    Vector {
        w_diag: [f64; 2],
    },
    Matrix {
        #[serde(rename = "W")]
        w: [[f64; 2]; 2],
        b: [f64; 2],
    },
}

impl ScalerParams {
    pub fn identity(kind: ScalerKind) -> Self {
        match kind {
            ScalerKind::Temperature => ScalerParams::Temperature { t: 1.0 },
            ScalerKind::Vector => ScalerParams::Vector { w_diag: [1.0, 1.0] },
            ScalerKind::Matrix => ScalerParams::Matrix {
                w: [[1.0, 0.0], [0.0, 1.0]],
                b: [0.0, 0.0],
            },
        }
    }

    pub fn kind(&self) -> ScalerKind {
        match self {
            ScalerParams::Temperature { .. } => ScalerKind::Temperature,
            ScalerParams::Vector { .. } => ScalerKind::Vector,
            ScalerParams::Matrix { .. } => ScalerKind::Matrix,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match self {
            ScalerParams::Temperature { t } => {
                if !(*t > 0.0) {
                    return Err(Error::invalid(format!("temperature must be positive, got {t}")));
                }
                t.is_finite()
            }
            ScalerParams::Vector { w_diag } => w_diag.iter().all(|v| v.is_finite()),
            ScalerParams::Matrix { w, b } => {
                w.iter().flatten().chain(b.iter()).all(|v| v.is_finite())
            }
        };
        if finite {
            Ok(())
        } else {
            Err(Error::invalid("scaler has non-finite parameters"))
        }
    }

    /// Transformed logits.
    pub fn transform(&self, z: [f64; 2]) -> [f64; 2] {
        match *self {
            ScalerParams::Temperature { t } => [z[0] / t, z[1] / t],
            ScalerParams::Vector { w_diag } => [w_diag[0] * z[0], w_diag[1] * z[1]],
            ScalerParams::Matrix { w, b } => [
                w[0][0] * z[0] + w[0][1] * z[1] + b[0],
                w[1][0] * z[0] + w[1][1] * z[1] + b[1],
            ],
        }
    }

    fn to_vec(self) -> Vec<f64> {
        match self {
            ScalerParams::Temperature { t } => vec![t],
            ScalerParams::Vector { w_diag } => w_diag.to_vec(),
            ScalerParams::Matrix { w, b } => vec![w[0][0], w[0][1], w[1][0], w[1][1], b[0], b[1]],
        }
    }

    fn from_vec(kind: ScalerKind, v: &[f64]) -> Self {
        match kind {
            ScalerKind::Temperature => ScalerParams::Temperature { t: v[0] },
            ScalerKind::Vector => ScalerParams::Vector { w_diag: [v[0], v[1]] },
            ScalerKind::Matrix => ScalerParams::Matrix {
                w: [[v[0], v[1]], [v[2], v[3]]],
                b: [v[4], v[5]],
            },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: ScalerParams = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Calibrated prediction for one logit vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledPrediction {
    pub probs: [f64; 2],
    pub predicted_label: usize,
    pub confidence: f64,
}

/// Apply a scaler to a logit vector. The label is the argmax of the
/// transformed logits.
pub fn apply_scaler(scaler: &ScalerParams, z: [f64; 2]) -> Result<ScaledPrediction> {
    scaler.validate()?;
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite logits"));
    }
    let u = scaler.transform(z);
    let p = softmax(&u);
    let predicted_label = argmax(&u);
    Ok(ScaledPrediction {
        probs: [p[0], p[1]],
        predicted_label,
        confidence: p[predicted_label],
    })
}

/// Mean NLL of the labels under the scaled logits.
pub fn scaled_nll(scaler: &ScalerParams, logits: &[[f64; 2]], labels: &[usize]) -> Result<f64> {
    scaler.validate()?;
    check_validation_set(logits, labels)?;
    Ok(nll_of(|z| scaler.transform(z), logits, labels))
}

fn nll_of(f: impl Fn([f64; 2]) -> [f64; 2], logits: &[[f64; 2]], labels: &[usize]) -> f64 {
    let total: f64 = logits
        .iter()
        .zip(labels)
        .map(|(&z, &y)| -clamp_probability(softmax(&f(z))[y]).ln())
        .sum();
    total / logits.len() as f64
}

fn check_validation_set(logits: &[[f64; 2]], labels: &[usize]) -> Result<()> {
    if logits.is_empty() {
        return Err(Error::invalid("empty validation set"));
    }
    if logits.len() != labels.len() {
        return Err(Error::invalid("logits and labels differ in length"));
    }
    if logits.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite validation logits"));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::invalid("labels must be 0 or 1"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    /// Iteration budget exhausted before the gradient tolerance was met.
    MaxIterations,
    /// The temperature optimum lies at (or beyond) the search bound.
    BoundaryClamped,
}

/// One row of a convergence log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitLogEntry {
    pub iter: usize,
    pub nll: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub scaler: ScalerParams,
    pub status: FitStatus,
    /// Validation NLL at the identity.
    pub initial_nll: f64,
    /// Validation NLL of the returned scaler.
    pub nll: f64,
    pub log: Vec<FitLogEntry>,
}

pub fn fit_log_csv(log: &[FitLogEntry]) -> String {
    let mut out = String::from("iter,nll,grad_norm\n");
    for e in log {
        out.push_str(&format!("{},{},{}\n", e.iter, e.nll, e.grad_norm));
    }
    out
}

/// Mean NLL and its first two derivatives w.r.t. `log T`.
fn temperature_objective(log_t: f64, logits: &[[f64; 2]], labels: &[usize]) -> (f64, f64, f64) {
    let inv_t = (-log_t).exp();
    let (mut f, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for (z, &y) in logits.iter().zip(labels) {
        let p = softmax(&[z[0] * inv_t, z[1] * inv_t]);
        f -= clamp_probability(p[y]).ln();
        let mean_z = p[0] * z[0] + p[1] * z[1];
        let var_z = p[0] * (z[0] - mean_z).powi(2) + p[1] * (z[1] - mean_z).powi(2);
        let g = (z[y] - mean_z) * inv_t;
        d1 += g;
        d2 += -g + inv_t * inv_t * var_z;
    }
    let n = logits.len() as f64;
    (f / n, d1 / n, d2 / n)
}

/// Fit a temperature on validation logits.
pub fn fit_temperature(logits: &[[f64; 2]], labels: &[usize]) -> Result<FitOutcome> {
    check_validation_set(logits, labels)?;
    let f = |t: f64| temperature_objective(t, logits, labels);
    let (lo_bound, hi_bound) = (T_MIN.ln(), T_MAX.ln());
    let mut log = Vec::new();

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo_bound, hi_bound);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c).0, f(d).0);
    let mut iter = 0;
    while b - a > 1e-9 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c).0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d).0;
        }
        iter += 1;
        let mid = 0.5 * (a + b);
        let (nll, g, _) = f(mid);
        log.push(FitLogEntry {
            iter,
            nll,
            grad_norm: g.abs(),
        });
    }
    let mut t = 0.5 * (a + b);
    let (mut best, _, _) = f(t);
    for _ in 0..3 {
        let (_, g, h) = f(t);
        if !(h > 0.0) {
            break;
        }
        let candidate = (t - g / h).clamp(lo_bound, hi_bound);
        let (fc, gc, _) = f(candidate);
        iter += 1;
        log.push(FitLogEntry {
            iter,
            nll: fc,
            grad_norm: gc.abs(),
        });
        if fc <= best {
            t = candidate;
            best = fc;
        } else {
            break;
        }
    }

    let initial_nll = f(0.0).0;
    if initial_nll < best {
        t = 0.0;
        best = initial_nll;
    }
    let status = if t - lo_bound < 1e-6 || hi_bound - t < 1e-6 {
        FitStatus::BoundaryClamped
    } else {
        FitStatus::Converged
    };
    Ok(FitOutcome {
        scaler: ScalerParams::Temperature {
            t: t.exp().clamp(T_MIN, T_MAX),
        },
        status,
        initial_nll,
        nll: best,
        log,
    })
}

/// Optimizer settings for vector / matrix scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub learning_rate: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            max_iter: 5000,
            grad_tol: 1e-6,
        }
    }
}

/// Mean NLL and gradient w.r.t. the flat scaler parameters.
fn affine_objective(kind: ScalerKind, theta: &[f64], logits: &[[f64; 2]], labels: &[usize]) -> (f64, Vec<f64>) {
    let scaler = ScalerParams::from_vec(kind, theta);
    let mut grad = vec![0.0; theta.len()];
    let mut f = 0.0;
    for (&z, &y) in logits.iter().zip(labels) {
        let p = softmax(&scaler.transform(z));
        f -= clamp_probability(p[y]).ln();
        let du = [p[0] - f64::from(u8::from(y == 0)), p[1] - f64::from(u8::from(y == 1))];
        match kind {
            ScalerKind::Vector => {
                grad[0] += du[0] * z[0];
                grad[1] += du[1] * z[1];
            }
            ScalerKind::Matrix => {
                grad[0] += du[0] * z[0];
                grad[1] += du[0] * z[1];
                grad[2] += du[1] * z[0];
                grad[3] += du[1] * z[1];
                grad[4] += du[0];
                grad[5] += du[1];
            }
            ScalerKind::Temperature => unreachable!("temperature uses its own fit"),
        }
    }
    let n = logits.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    (f / n, grad)
}

fn fit_affine(kind: ScalerKind, logits: &[[f64; 2]], labels: &[usize], opts: &FitOptions) -> Result<FitOutcome> {
    check_validation_set(logits, labels)?;
    if opts.max_iter == 0 {
        return Err(Error::invalid("max_iter must be at least 1"));
    }
    let init = ScalerParams::identity(kind).to_vec();
    let mut theta = init.clone();
    let mut state = AdamState::new(theta.len());
    let adam = AdamConfig::with_lr(opts.learning_rate);
    let mut log = Vec::new();
    let mut status = FitStatus::MaxIterations;
    let mut initial_nll = None;
    for iter in 0..opts.max_iter {
        let (nll, grad) = affine_objective(kind, &theta, logits, labels);
        initial_nll.get_or_insert(nll);
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        log.push(FitLogEntry { iter, nll, grad_norm });
        if grad_norm < opts.grad_tol {
            status = FitStatus::Converged;
            break;
        }
        state.step(&mut theta, &grad, &adam);
    }
    let initial_nll = initial_nll.expect("at least one iteration");
    let (mut nll, grad) = affine_objective(kind, &theta, logits, labels);
    if status == FitStatus::MaxIterations {
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        log.push(FitLogEntry {
            iter: opts.max_iter,
            nll,
            grad_norm,
        });
        if grad_norm < opts.grad_tol {
            status = FitStatus::Converged;
        }
    }
    if nll > initial_nll {
        // never hand back something worse than uncalibrated
        theta = init;
        nll = initial_nll;
    }
    Ok(FitOutcome {
        scaler: ScalerParams::from_vec(kind, &theta),
        status,
        initial_nll,
        nll,
        log,
    })
}

/// Diagonal scaling `softmax(diag(w) z)`, bias fixed at zero.
pub fn fit_vector(logits: &[[f64; 2]], labels: &[usize], opts: &FitOptions) -> Result<FitOutcome> {
    fit_affine(ScalerKind::Vector, logits, labels, opts)
}

/// Full affine scaling `softmax(W z + b)`.
pub fn fit_matrix(logits: &[[f64; 2]], labels: &[usize], opts: &FitOptions) -> Result<FitOutcome> {
    fit_affine(ScalerKind::Matrix, logits, labels, opts)
}

/// Fit any scaler kind with default options.
pub fn fit(kind: ScalerKind, logits: &[[f64; 2]], labels: &[usize]) -> Result<FitOutcome> {
    match kind {
        ScalerKind::Temperature => fit_temperature(logits, labels),
        ScalerKind::Vector => fit_vector(logits, labels, &FitOptions::default()),
        ScalerKind::Matrix => fit_matrix(logits, labels, &FitOptions::default()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_scalers_match_softmax() {
        let z = [1.3, -0.4];
        let plain = softmax(&z);
        for kind in ScalerKind::ALL {
            let out = apply_scaler(&ScalerParams::identity(kind), z).unwrap();
            assert!((out.probs[0] - plain[0]).abs() < 1e-15);
            assert_eq!(out.predicted_label, 0);
        }
    }

    #[test]
    fn huge_temperature_flattens() {
        let out = apply_scaler(&ScalerParams::Temperature { t: 1e6 }, [3.0, 0.0]).unwrap();
        assert!((out.probs[0] - 0.5).abs() < 1e-5 && (out.probs[1] - 0.5).abs() < 1e-5);
    }

    #[test]
    fn invalid_temperature_rejected() {
        for t in [0.0, -1.0, f64::NAN] {
            assert!(apply_scaler(&ScalerParams::Temperature { t }, [1.0, 0.0]).is_err());
        }
        assert!(apply_scaler(&ScalerParams::identity(ScalerKind::Matrix), [f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn degenerate_validation_set_clamps() {
        let logits = vec![[5.0, 0.0]; 20];
        let labels = vec![0; 20];
        let fit = fit_temperature(&logits, &labels).unwrap();
        assert_eq!(fit.status, FitStatus::BoundaryClamped);
        match fit.scaler {
            ScalerParams::Temperature { t } => assert!((t - T_MIN).abs() < 1e-6),
            _ => unreachable!(),
        }
    }

    #[test]
    fn single_iteration_is_one_adam_step() {
        let logits = vec![[2.0, -1.0], [0.5, 0.3], [-1.0, 1.5], [3.0, 0.0]];
        let labels = vec![1, 0, 1, 1];
        let opts = FitOptions {
            max_iter: 1,
            ..FitOptions::default()
        };
        for kind in [ScalerKind::Vector, ScalerKind::Matrix] {
            let fit = fit_affine(kind, &logits, &labels, &opts).unwrap();
            let mut theta = ScalerParams::identity(kind).to_vec();
            let (_, grad) = affine_objective(kind, &theta, &logits, &labels);
            AdamState::new(theta.len()).step(&mut theta, &grad, &AdamConfig::with_lr(1e-2));
            assert_eq!(fit.scaler, ScalerParams::from_vec(kind, &theta));
            assert_eq!(fit.status, FitStatus::MaxIterations);
        }
    }

    #[test]
    fn affine_gradient_matches_finite_differences() {
        let logits = vec![[2.0, -1.0], [0.5, 0.3], [-1.0, 1.5]];
        let labels = vec![1, 0, 1];
        let theta = vec![1.1, -0.2, 0.3, 0.9, 0.05, -0.1];
        let (_, g) = affine_objective(ScalerKind::Matrix, &theta, &logits, &labels);
        let h = 1e-6;
        for i in 0..theta.len() {
            let mut p = theta.clone();
            let mut m = theta.clone();
            p[i] += h;
            m[i] -= h;
            let fd = (affine_objective(ScalerKind::Matrix, &p, &logits, &labels).0
                - affine_objective(ScalerKind::Matrix, &m, &logits, &labels).0)
                / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8, "param {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn temperature_derivatives_match_finite_differences() {
        let logits = vec![[2.0, -1.0], [0.5, 0.3], [-1.0, 1.5]];
        let labels = vec![1, 0, 1];
        let t = 0.3;
        let h = 1e-5;
        let (_, g, hess) = temperature_objective(t, &logits, &labels);
        let (fp, gp, _) = temperature_objective(t + h, &logits, &labels);
        let (fm, gm, _) = temperature_objective(t - h, &logits, &labels);
        assert!(((fp - fm) / (2.0 * h) - g).abs() < 1e-8);
        assert!(((gp - gm) / (2.0 * h) - hess).abs() < 1e-7);
    }

    #[test]
    fn json_format() {
        let s = ScalerParams::Temperature { t: 1.5 };
        let json = s.to_json().unwrap();
        assert!(json.contains("\"kind\": \"temperature\"") && json.contains("\"T\": 1.5"));
        assert_eq!(ScalerParams::from_json(&json).unwrap(), s);
        let m = ScalerParams::identity(ScalerKind::Matrix);
        let json = m.to_json().unwrap();
        assert!(json.contains("\"W\"") && json.contains("\"b\""));
        assert_eq!(ScalerParams::from_json(&json).unwrap(), m);
        let v = ScalerParams::Vector { w_diag: [0.5, 2.0] };
        assert_eq!(ScalerParams::from_json(&v.to_json().unwrap()).unwrap(), v);
        assert!(ScalerParams::from_json(r#"{"kind":"temperature","T":-1}"#).is_err());
        assert!(ScalerParams::from_json(r#"{"kind":"vector","w_diag":[1,1],"b":[0,0]}"#).is_err());
    }

    #[test]
    fn bad_validation_sets() {
        assert!(fit_temperature(&[], &[]).is_err());
        assert!(fit_vector(&[[f64::INFINITY, 0.0]], &[0], &FitOptions::default()).is_err());
        assert!(fit_matrix(&[[1.0, 0.0]], &[0, 1], &FitOptions::default()).is_err());
    }

    proptest! {
        #[test]
        fn temperature_preserves_argmax(z0 in -20.0f64..20.0, z1 in -20.0f64..20.0, t in 0.01f64..100.0) {
            let z = [z0, z1];
            let out = apply_scaler(&ScalerParams::Temperature { t }, z).unwrap();
            prop_assert_eq!(out.predicted_label, argmax(&z));
            prop_assert!((out.probs[0] + out.probs[1] - 1.0).abs() < 1e-12);
        }

        #[test]
        fn confidence_decreases_with_temperature(gap in 0.01f64..10.0, t in 0.05f64..20.0) {
            let z = [gap, 0.0];
            let lo = apply_scaler(&ScalerParams::Temperature { t }, z).unwrap().confidence;
            let hi = apply_scaler(&ScalerParams::Temperature { t: t * 1.1 }, z).unwrap().confidence;
            prop_assert!(hi <= lo);
            // both round to 1.0 once the scaled gap is large
            if gap / t < 30.0 {
                prop_assert!(hi < lo);
            }
        }

        #[test]
        fn scaled_probabilities_normalized(
            z0 in -30.0f64..30.0, z1 in -30.0f64..30.0,
            w in prop::array::uniform4(-3.0f64..3.0), b in prop::array::uniform2(-3.0f64..3.0),
        ) {
            let s = ScalerParams::Matrix { w: [[w[0], w[1]], [w[2], w[3]]], b };
            let out = apply_scaler(&s, [z0, z1]).unwrap();
            prop_assert!((out.probs[0] + out.probs[1] - 1.0).abs() < 1e-12);
        }
    }
}
