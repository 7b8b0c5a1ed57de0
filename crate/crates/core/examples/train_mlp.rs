//! Train the ReLU win predictor with cross-entropy and check it on held-out
//! matches.

use calibforge::datagen::{generate_dataset, split, SyntheticConfig};
use calibforge::metrics::{build_report, PredictionRecord};
use calibforge::nn::{softmax, train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate_dataset(&SyntheticConfig {
        n_matches: 10_000,
        features: 60,
        roster_size: 20,
        seed: 1,
        ..SyntheticConfig::default()
    })?;
    let (train_set, _, test_set) = split(&data, (0.8, 0.0, 0.2), 1)?;

    let config = TrainConfig {
        layer_sizes: vec![60, 64, 64, 2],
        learning_rate: 1e-3,
        epochs: 8,
        batch_size: 128,
        seed: 1,
        ..TrainConfig::default()
    };
    let outcome = train(&train_set, &config)?;
    for e in &outcome.log {
        println!("epoch {:>2}  loss {:.4}  train acc {:.3}", e.epoch, e.loss, e.train_acc);
    }

    let records = test_set
        .iter()
        .map(|s| {
            let p = softmax(&outcome.params.forward(&s.features)?);
            PredictionRecord::from_probs([p[0], p[1]], s.label)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = build_report(&records, 10)?;
    println!(
        "test: {} params, accuracy {:.2}%, ECE {:.2}%, NLL {:.4}",
        outcome.params.parameter_count(),
        100.0 * report.accuracy,
        100.0 * report.ece,
        report.nll_mean
    );
    Ok(())
}
