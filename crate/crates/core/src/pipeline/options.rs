//! Command options as given on the command line or in a JSON config file,
//! and their resolution into fully specified runs. Flags win over the file;
//! the file wins over defaults. Unknown keys in a config file are rejected.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use super::{artifact, PipelineError};
use crate::datagen::SyntheticConfig;
use crate::du_loss::DEFAULT_K_EVAL;
use crate::metrics::DEFAULT_BINS;
use crate::nn::{LossKind, TrainConfig};
use crate::scaling::ScalerKind;

/// Seed used when neither a flag nor a config file sets one.
pub const DEFAULT_SEED: u64 = 42;
/// Fraction of the training file held out for fitting scalers.
pub const DEFAULT_VAL_FRACTION: f64 = 0.1;

macro_rules! fill_from {
    ($dst:ident, $src:ident; $($field:ident),* $(,)?) => {
        $( if $dst.$field.is_none() { $dst.$field = $src.$field; } )*
    };
}

fn load_file<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T, PipelineError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

fn out_dir(out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from("."))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenOptions {
    #[arg(skip)]
    pub seed: Option<u64>,
    #[arg(skip)]
    pub out: Option<PathBuf>,
    /// Training rows.
    #[arg(long)]
    pub n: Option<usize>,
    /// Test rows (default: n / 8).
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Feature count.
    #[arg(long)]
    pub features: Option<usize>,
    /// Outcome noise temperature late in the game
    #[arg(long)]
    pub noise_floor: Option<f64>,
    /// Extra outcome noise at the start of the game
    #[arg(long)]
    pub noise_gain: Option<f64>,
    /// Remaining generator settings (config file only).
    #[arg(skip)]
    pub generator: Option<SyntheticConfig>,
}

/// Fully resolved `gen` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenRun {
    pub out: PathBuf,
    pub n_train: usize,
    pub n_test: usize,
    pub generator: SyntheticConfig,
}

impl GenRun {
    /// Reference desk-scale data: 20000 training and 2500 test rows.
    pub fn reference(out: PathBuf, seed: u64) -> Self {
        Self {
            out,
            n_train: 20_000,
            n_test: 2_500,
            generator: SyntheticConfig {
                seed,
                ..SyntheticConfig::default()
            },
        }
    }
}

impl GenOptions {
    pub fn resolve(mut self, config: Option<&Path>) -> Result<GenRun, PipelineError> {
        let file: GenOptions = load_file(config)?;
        fill_from!(self, file; seed, out, n, n_test, features, noise_floor, noise_gain, generator);
        let mut generator = self.generator.unwrap_or_default();
        generator.seed = self.seed.unwrap_or(DEFAULT_SEED);
        if let Some(f) = self.features {
            generator.features = f;
        }
        if let Some(v) = self.noise_floor {
            generator.noise_floor = v;
        }
        if let Some(v) = self.noise_gain {
            generator.noise_gain = v;
        }
        let n_train = self.n.unwrap_or(20_000);
        if n_train == 0 {
            return Err(PipelineError::Config("--n must be positive".into()));
        }
        let n_test = self.n_test.unwrap_or(n_train / 8);
        Ok(GenRun {
            out: out_dir(self.out),
            n_train,
            n_test,
            generator,
        })
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOptions {
    #[arg(skip)]
    pub seed: Option<u64>,
    #[arg(skip)]
    pub out: Option<PathBuf>,
    /// Training CSV (default: <out>/train.csv).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// `ce` or `du`.
    #[arg(long, value_parser = ["ce", "du"])]
    pub loss: Option<String>,
    /// Adam learning rate (default 1e-4)
    #[arg(long)]
    pub lr: Option<f64>,
    /// Training epochs (default 20)
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Mini-batch size (default 512)
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Monte-Carlo draws per sample for the DU loss.
    #[arg(long)]
    pub k: Option<usize>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    /// Share of train.csv held out for calibration (default 0.1)
    #[arg(long)]
    pub val_fraction: Option<f64>,
}

/// Fully resolved `train` run. `train.layer_sizes` gets its input width
/// from the data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub out: PathBuf,
    pub data: PathBuf,
    pub val_fraction: f64,
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
}

impl TrainOptions {
    pub fn resolve(mut self, config: Option<&Path>) -> Result<TrainRun, PipelineError> {
        let file: TrainOptions = load_file(config)?;
        fill_from!(self, file; seed, out, data, loss, lr, epochs, batch_size, k, hidden, val_fraction);
        let out = out_dir(self.out);
        let defaults = TrainConfig::default();
        let loss = match self.loss.as_deref() {
            None | Some("ce") => LossKind::CrossEntropy,
            Some("du") => LossKind::DataUncertainty,
            Some(other) => return Err(PipelineError::Config(format!("unknown loss {other:?}"))),
        };
        let train = TrainConfig {
            learning_rate: self.lr.unwrap_or(defaults.learning_rate),
            epochs: self.epochs.unwrap_or(defaults.epochs),
            batch_size: self.batch_size.unwrap_or(defaults.batch_size),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            loss,
            k_train: self.k.unwrap_or(defaults.k_train),
            ..defaults
        };
        train
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        let val_fraction = check_fraction(self.val_fraction)?;
        Ok(TrainRun {
            data: self.data.unwrap_or_else(|| out.join(artifact::TRAIN_DATA)),
            out,
            val_fraction,
            hidden: self.hidden.unwrap_or_else(|| vec![256, 256]),
            train,
        })
    }
}

fn check_fraction(v: Option<f64>) -> Result<f64, PipelineError> {
    let v = v.unwrap_or(DEFAULT_VAL_FRACTION);
    if !(v > 0.0 && v < 1.0) {
        return Err(PipelineError::Config(format!("val_fraction must be in (0, 1), got {v}")));
    }
    Ok(v)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateOptions {
    #[arg(skip)]
    pub seed: Option<u64>,
    #[arg(skip)]
    pub out: Option<PathBuf>,
    /// Training CSV the model was trained on (default: <out>/train.csv).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Model file (default: <out>/model_ce.txt).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// `temperature`, `vector` or `matrix`.
    #[arg(long, value_parser = ["temperature", "vector", "matrix"])]
    pub kind: Option<String>,
    /// Share of train.csv held out for calibration (default 0.1)
    #[arg(long)]
    pub val_fraction: Option<f64>,
    /// Iteration budget for vector / matrix scaling.
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateRun {
    pub out: PathBuf,
    pub data: PathBuf,
    pub model: PathBuf,
    pub kind: ScalerKind,
    pub seed: u64,
    pub val_fraction: f64,
    pub max_iter: usize,
}

impl CalibrateOptions {
    pub fn resolve(mut self, config: Option<&Path>) -> Result<CalibrateRun, PipelineError> {
        let file: CalibrateOptions = load_file(config)?;
        fill_from!(self, file; seed, out, data, model, kind, val_fraction, max_iter);
        let out = out_dir(self.out);
        let kind = self
            .kind
            .as_deref()
            .unwrap_or("temperature")
            .parse::<ScalerKind>()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        let max_iter = self.max_iter.unwrap_or(5000);
        if max_iter == 0 {
            return Err(PipelineError::Config("max_iter must be positive".into()));
        }
        Ok(CalibrateRun {
            data: self.data.unwrap_or_else(|| out.join(artifact::TRAIN_DATA)),
            model: self
                .model
                .unwrap_or_else(|| out.join(artifact::model(LossKind::CrossEntropy))),
            out,
            kind,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            val_fraction: check_fraction(self.val_fraction)?,
            max_iter,
        })
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalOptions {
    #[arg(skip)]
    pub seed: Option<u64>,
    #[arg(skip)]
    pub out: Option<PathBuf>,
    /// Test CSV (default: <out>/test.csv).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Model file (default: <out>/model_ce.txt).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Optional scaler JSON applied to the model's logits.
    #[arg(long)]
    pub scaler: Option<PathBuf>,
    /// Run name used in artifact file names (default: none / du / scaler kind).
    #[arg(long)]
    pub name: Option<String>,
    /// Number of reliability bins.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Monte-Carlo draws per sample for DU models.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub out: PathBuf,
    pub data: PathBuf,
    pub model: PathBuf,
    pub scaler: Option<PathBuf>,
    pub name: Option<String>,
    pub seed: u64,
    pub bins: usize,
    pub k_eval: usize,
}

impl EvalOptions {
    pub fn resolve(mut self, config: Option<&Path>) -> Result<EvalRun, PipelineError> {
        let file: EvalOptions = load_file(config)?;
        fill_from!(self, file; seed, out, data, model, scaler, name, bins, k);
        let out = out_dir(self.out);
        let bins = self.bins.unwrap_or(DEFAULT_BINS);
        let k_eval = self.k.unwrap_or(DEFAULT_K_EVAL);
        if bins == 0 || k_eval == 0 {
            return Err(PipelineError::Config("bins and k must be positive".into()));
        }
        if let Some(name) = &self.name {
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(PipelineError::Config(format!("invalid run name {name:?}")));
            }
        }
        Ok(EvalRun {
            data: self.data.unwrap_or_else(|| out.join(artifact::TEST_DATA)),
            model: self
                .model
                .unwrap_or_else(|| out.join(artifact::model(LossKind::CrossEntropy))),
            out,
            scaler: self.scaler,
            name: self.name,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            bins,
            k_eval,
        })
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareOptions {
    #[arg(skip)]
    pub seed: Option<u64>,
    #[arg(skip)]
    pub out: Option<PathBuf>,
    /// Directory holding the per-method reports (default: <out>).
    #[arg(long)]
    pub runs: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRun {
    pub out: PathBuf,
    pub runs: PathBuf,
}

impl CompareOptions {
    pub fn resolve(mut self, config: Option<&Path>) -> Result<CompareRun, PipelineError> {
        let file: CompareOptions = load_file(config)?;
        fill_from!(self, file; seed, out, runs);
        let out = out_dir(self.out);
        Ok(CompareRun {
            runs: self.runs.unwrap_or_else(|| out.clone()),
            out,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"n": 500, "noise_gain": 3.0, "seed": 7}"#).unwrap();
        let opts = GenOptions {
            n: Some(100),
            ..GenOptions::default()
        };
        let run = opts.resolve(Some(&cfg)).unwrap();
        assert_eq!(run.n_train, 100);
        assert_eq!(run.n_test, 12);
        assert_eq!(run.generator.noise_gain, 3.0);
        assert_eq!(run.generator.seed, 7);
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"epochz": 3}"#).unwrap();
        let err = TrainOptions::default().resolve(Some(&cfg)).unwrap_err();
        assert!(matches!(err, PipelineError::Config(_)));
        std::fs::write(&cfg, r#"{"generator": {"noise": 1}}"#).unwrap();
        assert!(GenOptions::default().resolve(Some(&cfg)).is_err());
    }

    #[test]
    fn defaults() {
        let run = GenOptions::default().resolve(None).unwrap();
        assert_eq!((run.n_train, run.n_test), (20_000, 2_500));
        assert_eq!(run.generator.seed, DEFAULT_SEED);
        let t = TrainOptions::default().resolve(None).unwrap();
        assert_eq!(t.train.learning_rate, 1e-4);
        assert_eq!(t.train.epochs, 20);
        assert_eq!(t.data, PathBuf::from("./train.csv"));
        let e = EvalOptions::default().resolve(None).unwrap();
        assert_eq!((e.bins, e.k_eval), (10, 256));
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let zero = GenOptions {
            n: Some(0),
            ..GenOptions::default()
        };
        assert!(matches!(zero.resolve(None), Err(PipelineError::Config(_))));
        let bad = TrainOptions {
            epochs: Some(0),
            ..TrainOptions::default()
        };
        assert!(matches!(bad.resolve(None), Err(PipelineError::Config(_))));
        let bad = EvalOptions {
            name: Some("../x".into()),
            ..EvalOptions::default()
        };
        assert!(matches!(bad.resolve(None), Err(PipelineError::Config(_))));
    }
}
