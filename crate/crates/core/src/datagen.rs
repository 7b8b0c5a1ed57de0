//! Synthetic match-state data with known win probabilities.
//!
//! Each sample is a snapshot of one match at a random in-game minute. All
//! difference features are red minus blue, and label 1 means the red team
//! won. The win probability is `p_true = sigmoid(a / tau(minute))`, where
//! `a` is a latent red advantage built from gold, experience, kills and team
//! composition, and `tau` is a noise temperature that shrinks as the game
//! goes on: early snapshots are close to coin flips, late ones are decisive.
//!
//! Feature layout (`F` columns):
//!
//! | columns | content |
//! |---|---|
//! | `minute` | in-game minute |
//! | `gold_diff`, `xp_diff` | red minus blue, in thousands |
//! | `kills_blue`, `kills_red` | kill counts so far |
//! | `comp_0 .. comp_{2R-1}` | one-hot picks: blue roster block, then red |
//! | `filler_*` | context features unrelated to the outcome |

use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::PredictionRecord;
use crate::nn::sigmoid;
use crate::seed;

/// Number of named match-state columns before the composition block.
pub const BASE_COLUMNS: [&str; 5] = ["minute", "gold_diff", "xp_diff", "kills_blue", "kills_red"];
const PICKS_PER_TEAM: usize = 5;

/// One labeled example.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    /// 0 = blue win, 1 = red win.
    pub label: usize,
    /// Known probability of label 1 (synthetic data only).
    pub p_true: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub n_matches: usize,
    /// Total feature count.
    pub features: usize,
    /// Champions in the pick pool; the composition block has `2 * roster_size` columns.
    pub roster_size: usize,
    /// Multiplier on the latent advantage.
    pub advantage_scale: f64,
    /// Standard deviation of the per-champion strength.
    pub champion_effect: f64,
    /// `tau(minute) = noise_floor + noise_gain / (1 + minute / 10)`.
    pub noise_floor: f64,
    pub noise_gain: f64,
    pub minute_min: u32,
    pub minute_max: u32,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_matches: 20_000,
            features: 295,
            roster_size: 140,
            advantage_scale: 1.0,
            champion_effect: 0.05,
            noise_floor: 0.3,
            noise_gain: 1.5,
            minute_min: 1,
            minute_max: 40,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn filler_columns(&self) -> usize {
        self.features
            .saturating_sub(BASE_COLUMNS.len() + 2 * self.roster_size)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_matches == 0 {
            return Err(Error::invalid("n_matches must be positive"));
        }
        if self.roster_size < 2 * PICKS_PER_TEAM {
            return Err(Error::invalid(format!(
                "roster_size must be at least {}",
                2 * PICKS_PER_TEAM
            )));
        }
        if self.features < BASE_COLUMNS.len() + 2 * self.roster_size {
            return Err(Error::invalid(format!(
                "{} features cannot hold {} base columns and a {}-wide composition block",
                self.features,
                BASE_COLUMNS.len(),
                2 * self.roster_size
            )));
        }
        if !(self.noise_floor >= 0.0 && self.noise_gain >= 0.0) {
            return Err(Error::invalid("noise parameters must be non-negative"));
        }
        if self.noise_floor == 0.0 && self.noise_gain == 0.0 {
            return Err(Error::invalid("noise_floor and noise_gain cannot both be zero"));
        }
        if self.minute_min > self.minute_max {
            return Err(Error::invalid("minute range is empty"));
        }
        if !(self.advantage_scale.is_finite() && self.champion_effect >= 0.0) {
            return Err(Error::invalid("advantage_scale and champion_effect must be finite"));
        }
        Ok(())
    }

    /// Noise temperature at a given minute.
    pub fn noise_temperature(&self, minute: f64) -> f64 {
        self.noise_floor + self.noise_gain / (1.0 + minute / 10.0)
    }

    /// Column names, without `label` / `p_true`.
    pub fn column_names(&self) -> Vec<String> {
        let mut names: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
        names.extend((0..2 * self.roster_size).map(|i| format!("comp_{i}")));
        names.extend((0..self.filler_columns()).map(|i| format!("filler_{i}")));
        names
    }
}

/// Fixed per-champion strengths for a config.
fn champion_strengths(config: &SyntheticConfig) -> Vec<f64> {
    let mut rng = seed::stream(config.seed, &[seed::GENERATE, u64::MAX]);
    (0..config.roster_size)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            config.champion_effect * z
        })
        .collect()
}

/// Latent red advantage from the match-state columns and the composition term.
pub fn latent_advantage(
    config: &SyntheticConfig,
    minute: f64,
    gold_diff: f64,
    xp_diff: f64,
    kill_diff: f64,
    composition: f64,
) -> f64 {
    // gold converts to map control more decisively later in the game
    let late = minute / 40.0;
    config.advantage_scale
        * (0.25 * gold_diff + 0.10 * xp_diff + 0.04 * kill_diff + 0.15 * gold_diff * late)
        + composition
}

fn generate_match(config: &SyntheticConfig, strengths: &[f64], rng: &mut ChaCha8Rng) -> Sample {
    let minute = rng.random_range(config.minute_min..=config.minute_max) as f64;
    let spread = minute.max(1.0).sqrt();
    let gold_diff: f64 = Normal::new(0.0, 0.6 * spread).expect("positive sd").sample(rng);
    let xp_noise: f64 = Normal::new(0.0, 0.3 * spread).expect("positive sd").sample(rng);
    let xp_diff = 0.7 * gold_diff + xp_noise;

    let total_kills = if minute > 0.0 {
        Poisson::new(0.6 * minute).expect("positive rate").sample(rng) as u64
    } else {
        0
    };
    let red_share = sigmoid(gold_diff / 2.0);
    let kills_red = Binomial::new(total_kills, red_share)
        .expect("valid binomial")
        .sample(rng) as f64;
    let kills_blue = total_kills as f64 - kills_red;

    let roster = config.roster_size;
    let picks = sample_indices(rng, roster, 2 * PICKS_PER_TEAM).into_vec();
    let (blue, red) = picks.split_at(PICKS_PER_TEAM);
    let composition: f64 =
        red.iter().map(|&c| strengths[c]).sum::<f64>() - blue.iter().map(|&c| strengths[c]).sum::<f64>();

    let mut features = Vec::with_capacity(config.features);
    features.extend([minute, gold_diff, xp_diff, kills_blue, kills_red]);
    let comp_start = features.len();
    features.resize(comp_start + 2 * roster, 0.0);
    for &c in blue {
        features[comp_start + c] = 1.0;
    }
    for &c in red {
        features[comp_start + roster + c] = 1.0;
    }
    for _ in 0..config.filler_columns() {
        features.push(StandardNormal.sample(rng));
    }

    let a = latent_advantage(config, minute, gold_diff, xp_diff, kills_red - kills_blue, composition);
    let tau = config.noise_temperature(minute);
    let p_true = sigmoid(a / tau);
    let label = usize::from(rng.random::<f64>() < p_true);
    Sample {
        features,
        label,
        p_true: Some(p_true),
    }
}

/// Generate `config.n_matches` samples. Match `i` draws from its own seeded
/// stream, so any prefix of a larger run is identical to a smaller run.
pub fn generate_dataset(config: &SyntheticConfig) -> Result<Vec<Sample>> {
    config.validate()?;
    let strengths = champion_strengths(config);
    Ok((0..config.n_matches)
        .map(|i| {
            let mut rng = seed::stream(config.seed, &[seed::GENERATE, i as u64]);
            generate_match(config, &strengths, &mut rng)
        })
        .collect())
}

/// Confidence the model should have had in its predicted class.
pub fn true_confidence(p_true: f64, predicted_label: usize) -> f64 {
    if predicted_label == 1 {
        p_true
    } else {
        1.0 - p_true
    }
}

/// Pair every record's confidence with the true confidence of its predicted class.
pub fn oracle_pairs(records: &[PredictionRecord], samples: &[Sample]) -> Result<Vec<(f64, f64)>> {
    if records.len() != samples.len() {
        return Err(Error::invalid("records and samples differ in length"));
    }
    records
        .iter()
        .zip(samples)
        .enumerate()
        .map(|(i, (r, s))| {
            let p = s
                .p_true
                .ok_or_else(|| Error::invalid(format!("sample {i} has no p_true")))?;
            Ok((r.confidence, true_confidence(p, r.predicted_label)))
        })
        .collect()
}

/// Mean absolute difference between predicted and true confidence.
pub fn oracle_ece(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("oracle ECE of an empty set"));
    }
    Ok(pairs.iter().map(|(c, t)| (c - t).abs()).sum::<f64>() / pairs.len() as f64)
}

/// Column layout recovered from a dataset header.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSchema {
    pub feature_names: Vec<String>,
    pub has_p_true: bool,
}

impl DatasetSchema {
    pub fn for_config(config: &SyntheticConfig) -> Self {
        Self {
            feature_names: config.column_names(),
            has_p_true: true,
        }
    }

    /// Generic names for a plain feature matrix of the given width.
    pub fn generic(width: usize, has_p_true: bool) -> Self {
        let mut names: Vec<String> = BASE_COLUMNS.iter().take(width).map(|s| s.to_string()).collect();
        names.extend((names.len()..width).map(|i| format!("filler_{}", i - BASE_COLUMNS.len())));
        Self {
            feature_names: names,
            has_p_true,
        }
    }

    fn header(&self) -> Vec<String> {
        let mut h = self.feature_names.clone();
        h.push("label".into());
        if self.has_p_true {
            h.push("p_true".into());
        }
        h
    }

    fn from_header(header: &csv::StringRecord) -> Result<Self> {
        let cols: Vec<&str> = header.iter().collect();
        if cols.len() < BASE_COLUMNS.len() + 1 || cols[..BASE_COLUMNS.len()] != BASE_COLUMNS {
            return Err(Error::Schema(format!(
                "header must start with {}",
                BASE_COLUMNS.join(",")
            )));
        }
        let has_p_true = cols.last() == Some(&"p_true");
        let label_at = cols.len() - 1 - usize::from(has_p_true);
        if cols[label_at] != "label" {
            return Err(Error::Schema("missing label column".into()));
        }
        for c in &cols[BASE_COLUMNS.len()..label_at] {
            if !(c.starts_with("comp_") || c.starts_with("filler_")) {
                return Err(Error::Schema(format!("unexpected column {c:?}")));
            }
        }
        Ok(Self {
            feature_names: cols[..label_at].iter().map(|s| s.to_string()).collect(),
            has_p_true,
        })
    }
}

/// Write samples as CSV. Every sample must match the schema's width, and
/// carry `p_true` exactly when the schema does.
pub fn write_dataset(path: &Path, schema: &DatasetSchema, samples: &[Sample]) -> Result<()> {
    let text = dataset_to_csv(schema, samples)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn dataset_to_csv(schema: &DatasetSchema, samples: &[Sample]) -> Result<String> {
    let mut out = schema.header().join(",");
    out.push('\n');
    for (i, s) in samples.iter().enumerate() {
        if s.features.len() != schema.feature_names.len() {
            return Err(Error::Schema(format!(
                "sample {i} has {} features, schema has {}",
                s.features.len(),
                schema.feature_names.len()
            )));
        }
        for v in &s.features {
            out.push_str(&v.to_string());
            out.push(',');
        }
        out.push_str(&s.label.to_string());
        if schema.has_p_true {
            let p = s
                .p_true
                .ok_or_else(|| Error::Schema(format!("sample {i} has no p_true")))?;
            out.push(',');
            out.push_str(&p.to_string());
        }
        out.push('\n');
    }
    Ok(out)
}

/// Read a dataset CSV. Parse errors name the 1-based line.
pub fn read_dataset(path: &Path) -> Result<(DatasetSchema, Vec<Sample>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    dataset_from_csv(&text)
}

pub fn dataset_from_csv(text: &str) -> Result<(DatasetSchema, Vec<Sample>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header: {e}")))?
        .clone();
    let schema = DatasetSchema::from_header(&header)?;
    let width = header.len();
    let n_features = schema.feature_names.len();

    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != width {
            return Err(Error::Schema(format!(
                "line {line}: expected {width} columns, found {}",
                record.len()
            )));
        }
        let num = |idx: usize| -> Result<f64> {
            let field = &record[idx];
            field.trim().parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("column {:?}: {field:?} is not a number", &header[idx]),
            })
        };
        let features = (0..n_features).map(num).collect::<Result<Vec<_>>>()?;
        let label = match record[n_features].trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("label {other:?} is not 0 or 1"),
                })
            }
        };
        let p_true = if schema.has_p_true {
            let p = num(n_features + 1)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Parse {
                    line,
                    message: format!("p_true {p} outside [0, 1]"),
                });
            }
            Some(p)
        } else {
            None
        };
        samples.push(Sample {
            features,
            label,
            p_true,
        });
    }
    Ok((schema, samples))
}

/// Seeded disjoint partition into (train, val, test). Validation and test
/// sizes are `floor(n * fraction)`; the remainder goes to train.
pub fn split(
    dataset: &[Sample],
    fractions: (f64, f64, f64),
    seed_value: u64,
) -> Result<(Vec<Sample>, Vec<Sample>, Vec<Sample>)> {
    let (ftrain, fval, ftest) = fractions;
    if [ftrain, fval, ftest].iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
        return Err(Error::invalid(format!("invalid split fractions {fractions:?}")));
    }
    if ftrain + fval + ftest > 1.0 + 1e-12 {
        return Err(Error::invalid(format!(
            "split fractions sum to {} > 1",
            ftrain + fval + ftest
        )));
    }
    let n = dataset.len();
    let take = |f: f64| ((n as f64 * f) + 1e-9).floor() as usize;
    let n_val = take(fval);
    let n_test = take(ftest);

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seed::stream(seed_value, &[seed::SPLIT]);
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
    let pick = |idx: &[usize]| idx.iter().map(|&i| dataset[i].clone()).collect::<Vec<_>>();
    let val = pick(&order[..n_val]);
    let test = pick(&order[n_val..n_val + n_test]);
    let train = pick(&order[n_val + n_test..]);
    Ok((train, val, test))
}

/// Hold out `fraction` of `dataset` for validation; returns (train, val).
pub fn holdout(dataset: &[Sample], fraction: f64, seed_value: u64) -> Result<(Vec<Sample>, Vec<Sample>)> {
    let (train, val, _) = split(dataset, (1.0 - fraction, fraction, 0.0), seed_value)?;
    Ok((train, val))
}
