//! Fit temperature, vector and matrix scaling to overconfident logits and
//! compare calibration before and after.

use calibforge::metrics::{build_report, PredictionRecord};
use calibforge::nn::sigmoid;
use calibforge::scaling::{apply_scaler, fit, ScalerKind, ScalerParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn synth(n: usize, seed: u64) -> (Vec<[f64; 2]>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let margin = 0.2 + 1.5 * z;
            let label = usize::from(rng.random::<f64>() < sigmoid(margin));
            // a network that learned 2.5x too sharp a margin
            ([0.0, 2.5 * margin], label)
        })
        .unzip()
}

fn ece(scaler: &ScalerParams, logits: &[[f64; 2]], labels: &[usize]) -> Result<f64, calibforge::Error> {
    let records = logits
        .iter()
        .zip(labels)
        .map(|(z, &y)| PredictionRecord::from_probs(apply_scaler(scaler, *z)?.probs, y))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(build_report(&records, 10)?.ece)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (val_logits, val_labels) = synth(5_000, 1);
    let (test_logits, test_labels) = synth(20_000, 2);

    let identity = ScalerParams::identity(ScalerKind::Temperature);
    println!("uncalibrated  test ECE {:.2}%", 100.0 * ece(&identity, &test_logits, &test_labels)?);
    for kind in [ScalerKind::Temperature, ScalerKind::Vector, ScalerKind::Matrix] {
        let outcome = fit(kind, &val_logits, &val_labels)?;
        println!(
            "{:<12}  test ECE {:.2}%  val NLL {:.4} -> {:.4}  {:?}",
            kind.as_str(),
            100.0 * ece(&outcome.scaler, &test_logits, &test_labels)?,
            outcome.initial_nll,
            outcome.nll,
            outcome.scaler
        );
    }
    Ok(())
}
