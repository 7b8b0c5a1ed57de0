//! Score an overconfident predictor: reliability bins, ECE, MCE, NLL and an
//! SVG reliability diagram.
//!
//! ```text
//! cargo run --example reliability_metrics -- [diagram.svg]
//! ```

use calibforge::metrics::{build_report, reliability_svg, PredictionRecord};
use calibforge::nn::sigmoid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // labels follow sigmoid(a) but the predictor reports sigmoid(2a)
    let records = (0..5000)
        .map(|_| {
            let a: f64 = rng.random_range(-3.0..3.0);
            let label = usize::from(rng.random::<f64>() < sigmoid(a));
            let p1 = sigmoid(2.0 * a);
            PredictionRecord::from_probs([1.0 - p1, p1], label)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let report = build_report(&records, 10)?;
    println!("bin  range         count  accuracy  confidence");
    for b in &report.bins {
        match (b.accuracy, b.mean_confidence) {
            (Some(acc), Some(conf)) => println!(
                "{:>3}  ({:.1}, {:.1}]  {:>6}  {:>8.3}  {:>10.3}",
                b.m, b.lo, b.hi, b.count, acc, conf
            ),
            _ => println!("{:>3}  ({:.1}, {:.1}]  {:>6}", b.m, b.lo, b.hi, b.count),
        }
    }
    println!(
        "accuracy {:.2}%  ECE {:.2}%  MCE {:.2}%  NLL {:.4}",
        100.0 * report.accuracy,
        100.0 * report.ece,
        100.0 * report.mce,
        report.nll_mean
    );

    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("reliability.svg").display().to_string());
    std::fs::write(&path, reliability_svg(&report.bins, "Overconfident predictor"))?;
    println!("diagram written to {path}");
    Ok(())
}
