//! Reliability binning and calibration metrics.
//!
//! Predictions are partitioned into `M` equal-width confidence bins
//! `I_m = ((m-1)/M, m/M]`. For every bin the accuracy and mean confidence are
//! computed, from which the expected calibration error (bin-weighted mean gap)
//! and maximum calibration error (largest gap over nonempty bins) follow.
//! Negative log-likelihood is reported both as a sum and a per-sample mean.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of reliability bins.
pub const DEFAULT_BINS: usize = 10;

/// Lower clamp applied to probabilities before taking a logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Clamp a probability into `[PROB_FLOOR, 1]` so that `ln` stays finite.
#[inline]
pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0)
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// One evaluated prediction of a binary classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionRecord {
    pub confidence: f64,
    pub predicted_label: usize,
    pub true_label: usize,
    pub prob_vector: [f64; 2],
}

impl PredictionRecord {
    /// Build a record from a probability vector, deriving the predicted
    /// label (argmax) and its confidence.
    pub fn from_probs(prob_vector: [f64; 2], true_label: usize) -> Result<Self> {
        if true_label > 1 {
            return Err(Error::invalid(format!("true label {true_label} not in {{0,1}}")));
        }
        if prob_vector.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid(format!("invalid probability vector {prob_vector:?}")));
        }
        let total = prob_vector[0] + prob_vector[1];
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "probability vector sums to {total}, expected 1"
            )));
        }
        let predicted_label = argmax(&prob_vector);
        Ok(Self {
            confidence: prob_vector[predicted_label],
            predicted_label,
            true_label,
            prob_vector,
        })
    }

    pub fn is_correct(&self) -> bool {
        self.predicted_label == self.true_label
    }

    /// Probability assigned to the true label.
    pub fn true_label_prob(&self) -> f64 {
        self.prob_vector[self.true_label]
    }
}

/// Statistics of one reliability bin. `accuracy` and `mean_confidence` are
/// `None` for empty bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "BinJson", try_from = "BinJson")]
pub struct BinStats {
    pub m: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub accuracy: Option<f64>,
    pub mean_confidence: Option<f64>,
}

impl BinStats {
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// `|acc - conf|`, or `None` for an empty bin.
    pub fn gap(&self) -> Option<f64> {
        match (self.accuracy, self.mean_confidence) {
            (Some(a), Some(c)) => Some((a - c).abs()),
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct BinJson {
    m: usize,
    lo: f64,
    hi: f64,
    count: usize,
    acc: Option<f64>,
    conf: Option<f64>,
    empty: bool,
}

impl From<BinStats> for BinJson {
    fn from(b: BinStats) -> Self {
        BinJson {
            m: b.m,
            lo: b.lo,
            hi: b.hi,
            count: b.count,
            acc: b.accuracy,
            conf: b.mean_confidence,
            empty: b.count == 0,
        }
    }
}

impl TryFrom<BinJson> for BinStats {
    type Error = String;

    fn try_from(b: BinJson) -> std::result::Result<Self, String> {
        if b.empty != (b.count == 0) {
            return Err(format!("bin {} has inconsistent empty marker", b.m));
        }
        Ok(BinStats {
            m: b.m,
            lo: b.lo,
            hi: b.hi,
            count: b.count,
            accuracy: b.acc,
            mean_confidence: b.conf,
        })
    }
}

/// Summary metrics for a prediction set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub accuracy: f64,
    pub ece: f64,
    pub mce: f64,
    pub nll_sum: f64,
    pub nll_mean: f64,
    pub n: usize,
    pub bins: Vec<BinStats>,
    /// Mean gap to the known true confidence; only available for synthetic data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_ece: Option<f64>,
}

/// Negative log-likelihood of a record set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nll {
    pub sum: f64,
    pub mean: f64,
}

fn bin_edge(k: usize, bins: usize) -> f64 {
    k as f64 / bins as f64
}

/// Bin (1-based) whose interval `((m-1)/M, m/M]` contains `confidence`.
/// A confidence of exactly 0 falls into bin 1.
pub fn bin_index(confidence: f64, bins: usize) -> Result<usize> {
    if bins == 0 {
        return Err(Error::invalid("number of bins must be positive"));
    }
    if !(0.0..=1.0).contains(&confidence) {
        return Err(Error::invalid(format!("confidence {confidence} outside [0, 1]")));
    }
    let mut m = ((confidence * bins as f64).ceil() as usize).clamp(1, bins);
    // the product can round across an edge; settle against the exact edges
    while m > 1 && confidence <= bin_edge(m - 1, bins) {
        m -= 1;
    }
    while m < bins && confidence > bin_edge(m, bins) {
        m += 1;
    }
    Ok(m)
}

/// Partition records into `bins` equal-width confidence bins.
pub fn compute_bins(records: &[PredictionRecord], bins: usize) -> Result<Vec<BinStats>> {
    if records.is_empty() {
        return Err(Error::invalid("cannot bin an empty record set"));
    }
    if bins == 0 {
        return Err(Error::invalid("number of bins must be positive"));
    }
    let mut counts = vec![0usize; bins];
    let mut correct = vec![0usize; bins];
    let mut conf_sum = vec![0.0f64; bins];
    for r in records {
        let m = bin_index(r.confidence, bins)? - 1;
        counts[m] += 1;
        conf_sum[m] += r.confidence;
        if r.is_correct() {
            correct[m] += 1;
        }
    }
    Ok((0..bins)
        .map(|i| {
            let count = counts[i];
            let (accuracy, mean_confidence) = if count == 0 {
                (None, None)
            } else {
                (
                    Some(correct[i] as f64 / count as f64),
                    Some(conf_sum[i] / count as f64),
                )
            };
            BinStats {
                m: i + 1,
                lo: bin_edge(i, bins),
                hi: bin_edge(i + 1, bins),
                count,
                accuracy,
                mean_confidence,
            }
        })
        .collect())
}

/// Expected calibration error: `sum_m |B_m|/n * |acc(B_m) - conf(B_m)|`.
pub fn ece(bins: &[BinStats], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("ECE needs a positive sample count"));
    }
    let total: usize = bins.iter().map(|b| b.count).sum();
    if total != n {
        return Err(Error::invalid(format!("bin counts sum to {total}, expected {n}")));
    }
    Ok(bins
        .iter()
        .filter_map(|b| b.gap().map(|g| b.count as f64 / n as f64 * g))
        .sum())
}

/// Maximum calibration error over nonempty bins.
pub fn mce(bins: &[BinStats]) -> Result<f64> {
    bins.iter()
        .filter_map(BinStats::gap)
        .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.max(g))))
        .ok_or_else(|| Error::invalid("MCE needs at least one nonempty bin"))
}

/// Negative log-likelihood of the true labels, with probabilities clamped
/// away from zero.
pub fn nll(records: &[PredictionRecord]) -> Result<Nll> {
    if records.is_empty() {
        return Err(Error::invalid("NLL of an empty record set"));
    }
    let mut sum = 0.0;
    for r in records {
        let p = r.true_label_prob();
        if p.is_nan() {
            return Err(Error::NumericDomain("NaN probability".into()));
        }
        sum -= clamp_probability(p).ln();
    }
    Ok(Nll {
        sum,
        mean: sum / records.len() as f64,
    })
}

/// Aggregate accuracy, ECE, MCE and NLL for a record set.
pub fn build_report(records: &[PredictionRecord], bins: usize) -> Result<CalibrationReport> {
    let stats = compute_bins(records, bins)?;
    let n = records.len();
    let correct = records.iter().filter(|r| r.is_correct()).count();
    let nll = nll(records)?;
    Ok(CalibrationReport {
        accuracy: correct as f64 / n as f64,
        ece: ece(&stats, n)?,
        mce: mce(&stats)?,
        nll_sum: nll.sum,
        nll_mean: nll.mean,
        n,
        bins: stats,
        oracle_ece: None,
    })
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Reliability diagram as CSV. Empty bins leave the metric columns blank.
pub fn reliability_csv(bins: &[BinStats]) -> String {
    let mut out = String::from("bin_lo,bin_hi,count,accuracy,confidence,gap\n");
    for b in bins {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            b.lo,
            b.hi,
            b.count,
            opt_field(b.accuracy),
            opt_field(b.mean_confidence),
            opt_field(b.gap())
        );
    }
    out
}

/// Reliability diagram as a standalone SVG: accuracy bars per bin, the mean
/// confidence marked on each bar, and the identity diagonal.
pub fn reliability_svg(bins: &[BinStats], title: &str) -> String {
    const W: f64 = 400.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    let plot = W - 2.0 * PAD;
    let x = |v: f64| PAD + v * plot;
    let y = |v: f64| H - PAD - v * plot;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="25" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        W / 2.0,
        escape_xml(title)
    );
    for b in bins {
        let (Some(acc), Some(conf)) = (b.accuracy, b.mean_confidence) else {
            continue;
        };
        let bar_w = (b.hi - b.lo) * plot;
        let _ = writeln!(
            s,
            r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="#4c72b0" stroke="#1f3b66"/>"##,
            x(b.lo),
            y(acc),
            bar_w,
            acc * plot
        );
        let _ = writeln!(
            s,
            r##"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#dd5555" stroke-width="2"/>"##,
            x(b.lo),
            y(conf),
            x(b.hi),
            y(conf)
        );
    }
    let _ = writeln!(
        s,
        r##"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#555555" stroke-dasharray="4 4"/>"##,
        x(0.0),
        y(0.0),
        x(1.0),
        y(1.0)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{plot}" height="{plot}" fill="none" stroke="black"/>"#
    );
    for t in 0..=5 {
        let v = t as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="middle" font-family="sans-serif" font-size="10">{v:.1}</text>"#,
            x(v),
            H - PAD + 15.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="end" font-family="sans-serif" font-size="10">{v:.1}</text>"#,
            PAD - 5.0,
            y(v) + 3.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">confidence</text>"#,
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {})">accuracy</text>"#,
        H / 2.0,
        H / 2.0
    );
    s.push_str("</svg>\n");
    s
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
