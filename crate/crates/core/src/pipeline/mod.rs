//! The end-to-end workflow behind the command-line tool.
//!
//! Every step reads and writes plain files in an output directory:
//!
//! | step        | writes                                                        |
//! |-------------|---------------------------------------------------------------|
//! | `gen`       | `train.csv`, `test.csv`                                       |
//! | `train`     | `model_<loss>.txt`, `train_log_<loss>.csv`                    |
//! | `calibrate` | `scaler_<kind>.json`, `calib_log_<kind>.csv`                  |
//! | `eval`      | `report_<name>.json`, `reliability_<name>.{csv,svg}`, `predictions_<name>.csv` |
//! | `compare`   | `comparison.json`, `comparison.txt`                           |
//!
//! Each step also writes its resolved settings to `<step>_config.json`.
//! Artifacts never embed file paths, so the same inputs and seed give
//! byte-identical outputs in any directory.

pub mod options;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Axis;
use serde::{Deserialize, Serialize};

pub use options::{
    CalibrateOptions, CalibrateRun, CompareOptions, CompareRun, EvalOptions, EvalRun, GenOptions,
    GenRun, TrainOptions, TrainRun, DEFAULT_SEED, DEFAULT_VAL_FRACTION,
};

use crate::datagen::{self, DatasetSchema, Sample};
use crate::du_loss::{self, DensityOutput, MCConfig};
use crate::metrics::{self, CalibrationReport, PredictionRecord};
use crate::nn::{self, LossKind, SavedModel};
use crate::scaling::{self, FitOptions, FitStatus, ScalerKind, ScalerParams};
use crate::{seed, Error, TOOL_VERSION};

/// Artifact file names.
pub mod artifact {
    use crate::nn::LossKind;
    use crate::scaling::ScalerKind;

    pub const TRAIN_DATA: &str = "train.csv";
    pub const TEST_DATA: &str = "test.csv";
    pub const COMPARISON_JSON: &str = "comparison.json";
    pub const COMPARISON_TEXT: &str = "comparison.txt";

    pub fn model(loss: LossKind) -> String {
        format!("model_{}.txt", loss.as_str())
    }
    pub fn train_log(loss: LossKind) -> String {
        format!("train_log_{}.csv", loss.as_str())
    }
    pub fn scaler(kind: ScalerKind) -> String {
        format!("scaler_{}.json", kind.as_str())
    }
    pub fn calib_log(kind: ScalerKind) -> String {
        format!("calib_log_{}.csv", kind.as_str())
    }
    pub fn report(name: &str) -> String {
        format!("report_{name}.json")
    }
    pub fn reliability_csv(name: &str) -> String {
        format!("reliability_{name}.csv")
    }
    pub fn reliability_svg(name: &str) -> String {
        format!("reliability_{name}.svg")
    }
    pub fn predictions(name: &str) -> String {
        format!("predictions_{name}.csv")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("missing artifacts: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    Missing(Vec<PathBuf>),
    #[error("{0}")]
    Failed(String),
}

impl PipelineError {
    /// Process exit code: 2 configuration, 3 I/O or unreadable input,
    /// 4 missing upstream artifact, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Io(_) => 3,
            PipelineError::Missing(_) => 4,
            PipelineError::Failed(_) => 1,
        }
    }
}

impl From<Error> for PipelineError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) => PipelineError::Config(m),
            Error::NumericDomain(m) => PipelineError::Failed(m),
            e @ (Error::Io { .. }
            | Error::Parse { .. }
            | Error::Schema(_)
            | Error::ModelFormat(_)
            | Error::Json(_)) => PipelineError::Io(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, PipelineError>;

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::Io(format!("{}: {e}", dir.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| PipelineError::Failed(e.to_string()))
}

/// Record the resolved settings of a step as `<name>_config.json`.
fn log_config<T: Serialize>(out: &Path, name: &str, config: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Logged<'a, T> {
        tool_version: &'a str,
        command: &'a str,
        config: &'a T,
    }
    let text = to_json(&Logged {
        tool_version: TOOL_VERSION,
        command: name,
        config,
    })?;
    write_file(&out.join(format!("{name}_config.json")), text)
}

fn load_dataset(path: &Path) -> Result<(DatasetSchema, Vec<Sample>)> {
    let (schema, samples) = datagen::read_dataset(path)?;
    if samples.is_empty() {
        return Err(PipelineError::Io(format!("{}: no data rows", path.display())));
    }
    Ok((schema, samples))
}

// ---------------------------------------------------------------- gen

#[derive(Debug, Clone, PartialEq)]
pub struct GenSummary {
    pub train_rows: usize,
    pub test_rows: usize,
}

/// Generate `n_train + n_test` matches and split them in order into
/// `train.csv` and `test.csv`.
pub fn run_gen(run: &GenRun) -> Result<GenSummary> {
    let mut generator = run.generator.clone();
    generator.n_matches = run.n_train + run.n_test;
    generator.validate()?;
    create_dir(&run.out)?;
    log_config(&run.out, "gen", run)?;
    let samples = datagen::generate_dataset(&generator)?;
    let schema = DatasetSchema::for_config(&generator);
    let (train, test) = samples.split_at(run.n_train);
    datagen::write_dataset(&run.out.join(artifact::TRAIN_DATA), &schema, train)?;
    datagen::write_dataset(&run.out.join(artifact::TEST_DATA), &schema, test)?;
    Ok(GenSummary {
        train_rows: train.len(),
        test_rows: test.len(),
    })
}

// ---------------------------------------------------------------- train

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub model_path: PathBuf,
    pub train_rows: usize,
    pub log: Vec<nn::EpochLog>,
}

/// Train on the training file minus the validation holdout.
pub fn run_train(run: &TrainRun) -> Result<TrainSummary> {
    let (_, samples) = load_dataset(&run.data)?;
    let (fit_rows, _) = datagen::holdout(&samples, run.val_fraction, run.train.seed)?;
    let mut config = run.train.clone();
    config.layer_sizes = std::iter::once(samples[0].features.len())
        .chain(run.hidden.iter().copied())
        .chain(std::iter::once(2))
        .collect();
    create_dir(&run.out)?;
    log_config(&run.out, &format!("train_{}", config.loss.as_str()), run)?;

    let outcome = nn::train(&fit_rows, &config)?;
    let mut saved = SavedModel::new(outcome.params);
    let meta = [
        ("tool_version", TOOL_VERSION.to_string()),
        ("loss", config.loss.as_str().to_string()),
        ("learning_rate", config.learning_rate.to_string()),
        ("epochs", config.epochs.to_string()),
        ("batch_size", config.batch_size.to_string()),
        ("adam", format!("{},{},{}", config.beta1, config.beta2, config.epsilon)),
        ("seed", config.seed.to_string()),
        ("k_train", config.k_train.to_string()),
        ("antithetic", config.antithetic.to_string()),
        ("standardize", config.standardize.to_string()),
        ("val_fraction", run.val_fraction.to_string()),
        ("train_rows", fit_rows.len().to_string()),
    ];
    for (k, v) in meta {
        saved.meta.insert(k.to_string(), v);
    }
    let model_path = run.out.join(artifact::model(config.loss));
    saved.save(&model_path)?;
    write_file(&run.out.join(artifact::train_log(config.loss)), nn::log_csv(&outcome.log))?;
    Ok(TrainSummary {
        model_path,
        train_rows: fit_rows.len(),
        log: outcome.log,
    })
}

// ---------------------------------------------------------------- calibrate

/// Scaler JSON as written by `calibrate`: the scaler fields plus fit details.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerFile {
    #[serde(flatten)]
    pub scaler: ScalerParams,
    pub tool_version: String,
    pub status: FitStatus,
    pub initial_nll: f64,
    pub validation_nll: f64,
    pub validation_rows: usize,
    pub seed: u64,
}

/// Extra keys a scaler file may carry next to the scaler fields.
const SCALER_FILE_EXTRAS: [&str; 6] = [
    "tool_version",
    "status",
    "initial_nll",
    "validation_nll",
    "validation_rows",
    "seed",
];

/// Read a scaler from either a bare scaler JSON or a `calibrate` output.
pub fn load_scaler(path: &Path) -> Result<ScalerParams> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
    let bad = |e: String| PipelineError::Io(format!("{}: {e}", path.display()));
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if let Some(obj) = value.as_object_mut() {
        for key in SCALER_FILE_EXTRAS {
            obj.remove(key);
        }
    }
    let scaler: ScalerParams = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
    scaler.validate().map_err(|e| bad(e.to_string()))?;
    Ok(scaler)
}

/// Raw network outputs, one row per sample.
pub fn raw_outputs(params: &nn::ModelParams, samples: &[Sample]) -> Result<Vec<Vec<f64>>> {
    if let Some(s) = samples.iter().find(|s| s.features.len() != params.input_width()) {
        return Err(PipelineError::Config(format!(
            "data has {} features, model expects {}",
            s.features.len(),
            params.input_width()
        )));
    }
    let xs = nn::feature_matrix(samples)?;
    let out = params.forward_batch(xs.view())?;
    Ok(out.axis_iter(Axis(0)).map(|r| r.to_vec()).collect())
}

fn load_model(path: &Path) -> Result<SavedModel> {
    let model = SavedModel::load(path)?;
    if model.params.classes() != 2 {
        return Err(PipelineError::Config("only two-class models are supported".into()));
    }
    Ok(model)
}

/// Fit a scaler on the validation holdout of the training file.
pub fn run_calibrate(run: &CalibrateRun) -> Result<ScalerFile> {
    let model = load_model(&run.model)?;
    if model.params.du_head {
        return Err(PipelineError::Config(
            "post-hoc scaling needs a cross-entropy model, got a DU model".into(),
        ));
    }
    let (_, samples) = load_dataset(&run.data)?;
    let (_, val) = datagen::holdout(&samples, run.val_fraction, run.seed)?;
    let logits: Vec<[f64; 2]> = raw_outputs(&model.params, &val)?
        .into_iter()
        .map(|r| [r[0], r[1]])
        .collect();
    let labels: Vec<usize> = val.iter().map(|s| s.label).collect();
    create_dir(&run.out)?;
    log_config(&run.out, &format!("calibrate_{}", run.kind.as_str()), run)?;

    let outcome = match run.kind {
        ScalerKind::Temperature => scaling::fit_temperature(&logits, &labels)?,
        kind => {
            let opts = FitOptions {
                max_iter: run.max_iter,
                ..FitOptions::default()
            };
            match kind {
                ScalerKind::Vector => scaling::fit_vector(&logits, &labels, &opts)?,
                _ => scaling::fit_matrix(&logits, &labels, &opts)?,
            }
        }
    };
    let file = ScalerFile {
        scaler: outcome.scaler,
        tool_version: TOOL_VERSION.to_string(),
        status: outcome.status,
        initial_nll: outcome.initial_nll,
        validation_nll: outcome.nll,
        validation_rows: val.len(),
        seed: run.seed,
    };
    write_file(&run.out.join(artifact::scaler(run.kind)), to_json(&file)?)?;
    write_file(
        &run.out.join(artifact::calib_log(run.kind)),
        scaling::fit_log_csv(&outcome.log),
    )?;
    Ok(file)
}

// ---------------------------------------------------------------- eval

/// Per-sample prediction with the raw outputs it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub logits: [f64; 2],
    /// Log noise scale, DU models only.
    pub s_raw: Option<f64>,
    pub record: PredictionRecord,
    pub p_true: Option<f64>,
}

/// Report JSON written by `eval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tool_version: String,
    pub method: String,
    pub model_loss: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaler: Option<ScalerParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_eval: Option<usize>,
    pub seed: u64,
    #[serde(flatten)]
    pub report: CalibrationReport,
}

/// Predictions of a model, optionally through a scaler. DU models report
/// the Monte-Carlo expected probability with `k_eval` draws per sample.
pub fn predict(
    model: &SavedModel,
    scaler: Option<&ScalerParams>,
    samples: &[Sample],
    k_eval: usize,
    eval_seed: u64,
) -> Result<Vec<PredictionRow>> {
    if model.params.du_head && scaler.is_some() {
        return Err(PipelineError::Config("scalers apply to cross-entropy models only".into()));
    }
    let raw = raw_outputs(&model.params, samples)?;
    raw.iter()
        .zip(samples)
        .enumerate()
        .map(|(i, (r, s))| {
            let logits = [r[0], r[1]];
            let (probs, s_raw) = if model.params.du_head {
                let out = DensityOutput::from_raw(r)?;
                let mc = MCConfig::new(k_eval, seed::derive(eval_seed, &[seed::EVAL_NOISE, i as u64]));
                (du_loss::expected_prob(&out, &mc)?, Some(out.s_raw))
            } else if let Some(sc) = scaler {
                (scaling::apply_scaler(sc, logits)?.probs, None)
            } else {
                (nn::softmax2(logits), None)
            };
            Ok(PredictionRow {
                logits,
                s_raw,
                record: PredictionRecord::from_probs(probs, s.label)?,
                p_true: s.p_true,
            })
        })
        .collect()
}

/// Summary report of a prediction set, with the oracle error when every
/// sample carries its true probability.
pub fn report_of(rows: &[PredictionRow], bins: usize) -> Result<CalibrationReport> {
    let records: Vec<PredictionRecord> = rows.iter().map(|r| r.record).collect();
    let mut report = metrics::build_report(&records, bins)?;
    if rows.iter().all(|r| r.p_true.is_some()) {
        let pairs: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| {
                let p = r.p_true.expect("checked above");
                (r.record.confidence, datagen::true_confidence(p, r.record.predicted_label))
            })
            .collect();
        report.oracle_ece = Some(datagen::oracle_ece(&pairs)?);
    }
    Ok(report)
}

pub const PREDICTIONS_HEADER: &str =
    "index,logit_0,logit_1,s_raw,prob_0,prob_1,confidence,predicted,true,p_true";

/// Per-sample dump; enough to recompute every report field.
pub fn predictions_csv(rows: &[PredictionRow]) -> String {
    let mut out = String::from(PREDICTIONS_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (i, r) in rows.iter().enumerate() {
        let rec = &r.record;
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{},{},{},{},{}",
            r.logits[0],
            r.logits[1],
            opt(r.s_raw),
            rec.prob_vector[0],
            rec.prob_vector[1],
            rec.confidence,
            rec.predicted_label,
            rec.true_label,
            opt(r.p_true)
        );
    }
    out
}

/// Default run name: the scaler kind, `du` for DU models, else `none`.
pub fn default_eval_name(model: &SavedModel, scaler: Option<&ScalerParams>) -> String {
    match (model.params.du_head, scaler) {
        (true, _) => "du".into(),
        (false, Some(s)) => s.kind().as_str().into(),
        (false, None) => "none".into(),
    }
}

pub fn run_eval(run: &EvalRun) -> Result<EvalReport> {
    let model = load_model(&run.model)?;
    let scaler = run.scaler.as_deref().map(load_scaler).transpose()?;
    let (_, samples) = load_dataset(&run.data)?;
    let name = run
        .name
        .clone()
        .unwrap_or_else(|| default_eval_name(&model, scaler.as_ref()));
    let rows = predict(&model, scaler.as_ref(), &samples, run.k_eval, run.seed)?;
    let report = report_of(&rows, run.bins)?;
    create_dir(&run.out)?;
    log_config(&run.out, &format!("eval_{name}"), run)?;

    let du = model.params.du_head;
    let eval = EvalReport {
        tool_version: TOOL_VERSION.to_string(),
        method: name.clone(),
        model_loss: if du { "du" } else { "ce" }.to_string(),
        scaler,
        k_eval: du.then_some(run.k_eval),
        seed: run.seed,
        report,
    };
    write_file(&run.out.join(artifact::report(&name)), to_json(&eval)?)?;
    write_file(
        &run.out.join(artifact::reliability_csv(&name)),
        metrics::reliability_csv(&eval.report.bins),
    )?;
    let svg = metrics::reliability_svg(&eval.report.bins, &format!("Reliability: {name}"));
    let svg = svg.replacen('\n', &format!("\n<!-- {TOOL_VERSION} -->\n"), 1);
    write_file(&run.out.join(artifact::reliability_svg(&name)), svg)?;
    write_file(&run.out.join(artifact::predictions(&name)), predictions_csv(&rows))?;
    Ok(eval)
}

// ---------------------------------------------------------------- compare

/// Methods in table order: run name and row label.
pub const METHODS: [(&str, &str); 5] = [
    ("none", "No calibration"),
    ("temperature", "Temp. Scaling"),
    ("vector", "Vector Scaling"),
    ("matrix", "Matrix Scaling"),
    ("du", "DU Loss"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub label: String,
    pub accuracy: f64,
    pub ece: f64,
    pub mce: f64,
    pub nll_mean: f64,
    pub nll_sum: f64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_ece: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub tool_version: String,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn row(&self, method: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// Aligned text table; rates in percent, NLL as the mean per sample.
    pub fn to_text(&self) -> String {
        let oracle = self.rows.iter().all(|r| r.oracle_ece.is_some());
        let mut header = vec!["Method", "Accuracy [%]", "ECE [%]", "MCE [%]", "NLL"];
        if oracle {
            header.push("Oracle ECE [%]");
        }
        let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for r in &self.rows {
            let mut line = vec![
                r.label.clone(),
                format!("{:.2}", 100.0 * r.accuracy),
                format!("{:.2}", 100.0 * r.ece),
                format!("{:.2}", 100.0 * r.mce),
                format!("{:.4}", r.nll_mean),
            ];
            if let Some(o) = r.oracle_ece.filter(|_| oracle) {
                line.push(format!("{:.2}", 100.0 * o));
            }
            cells.push(line);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, row) in cells.iter().enumerate() {
            let parts: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, v)| {
                    if c == 0 {
                        format!("{v:<w$}", w = widths[c])
                    } else {
                        format!("{v:>w$}", w = widths[c])
                    }
                })
                .collect();
            out.push_str(parts.join("  ").trim_end());
            out.push('\n');
            if i == 0 {
                let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                out.push_str(&"-".repeat(total));
                out.push('\n');
            }
        }
        out
    }
}

pub fn run_compare(run: &CompareRun) -> Result<Comparison> {
    let paths: Vec<PathBuf> = METHODS.iter().map(|(m, _)| run.runs.join(artifact::report(m))).collect();
    let missing: Vec<PathBuf> = paths.iter().filter(|p| !p.is_file()).cloned().collect();
    if !missing.is_empty() {
        return Err(PipelineError::Missing(missing));
    }
    let mut rows = Vec::new();
    for ((method, label), path) in METHODS.iter().zip(&paths) {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
        let report: EvalReport = serde_json::from_str(&text)
            .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
        let r = report.report;
        rows.push(ComparisonRow {
            method: method.to_string(),
            label: label.to_string(),
            accuracy: r.accuracy,
            ece: r.ece,
            mce: r.mce,
            nll_mean: r.nll_mean,
            nll_sum: r.nll_sum,
            n: r.n,
            oracle_ece: r.oracle_ece,
        });
    }
    let comparison = Comparison {
        tool_version: TOOL_VERSION.to_string(),
        rows,
    };
    create_dir(&run.out)?;
    log_config(&run.out, "compare", run)?;
    write_file(&run.out.join(artifact::COMPARISON_JSON), to_json(&comparison)?)?;
    write_file(&run.out.join(artifact::COMPARISON_TEXT), comparison.to_text())?;
    Ok(comparison)
}

// ---------------------------------------------------------------- reference

/// Settings of the full reference experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceConfig {
    pub seed: u64,
    pub gen: GenRun,
    pub ce: TrainRun,
    pub du: TrainRun,
}

impl ReferenceConfig {
    /// Seed 42, 20000 / 2500 rows, 295 features, 10 bins.
    pub fn new(out: &Path) -> Self {
        Self::with_seed(out, DEFAULT_SEED)
    }

    pub fn with_seed(out: &Path, seed: u64) -> Self {
        let train = |loss: &str| TrainOptions {
            seed: Some(seed),
            out: Some(out.to_path_buf()),
            loss: Some(loss.into()),
            ..TrainOptions::default()
        }
        .resolve(None)
        .expect("reference training options are valid");
        Self {
            seed,
            gen: GenRun::reference(out.to_path_buf(), seed),
            ce: train("ce"),
            du: train("du"),
        }
    }
}

/// Run gen, both trainings, the three scalers, all five evaluations and the
/// comparison, all in `cfg.gen.out`.
pub fn run_reference(cfg: &ReferenceConfig) -> Result<Comparison> {
    let out = cfg.gen.out.clone();
    run_gen(&cfg.gen)?;
    run_train(&cfg.ce)?;
    run_train(&cfg.du)?;
    for kind in ScalerKind::ALL {
        let opts = CalibrateOptions {
            seed: Some(cfg.seed),
            out: Some(out.clone()),
            kind: Some(kind.as_str().into()),
            val_fraction: Some(cfg.ce.val_fraction),
            ..CalibrateOptions::default()
        };
        run_calibrate(&opts.resolve(None)?)?;
    }
    let evals: Vec<(LossKind, Option<ScalerKind>)> = std::iter::once((LossKind::CrossEntropy, None))
        .chain(ScalerKind::ALL.map(|k| (LossKind::CrossEntropy, Some(k))))
        .chain(std::iter::once((LossKind::DataUncertainty, None)))
        .collect();
    for (loss, kind) in evals {
        let opts = EvalOptions {
            seed: Some(cfg.seed),
            out: Some(out.clone()),
            model: Some(out.join(artifact::model(loss))),
            scaler: kind.map(|k| out.join(artifact::scaler(k))),
            ..EvalOptions::default()
        };
        run_eval(&opts.resolve(None)?)?;
    }
    run_compare(&CompareOptions {
        out: Some(out.clone()),
        ..CompareOptions::default()
    }
    .resolve(None)?)
}
