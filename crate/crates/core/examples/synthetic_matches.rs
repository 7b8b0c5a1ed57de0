//! Generate synthetic matches with known win probabilities and inspect how
//! outcome noise shrinks as the game goes on.

use calibforge::datagen::{generate_dataset, DatasetSchema, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SyntheticConfig {
        n_matches: 20_000,
        seed: 3,
        ..SyntheticConfig::default()
    };
    let samples = generate_dataset(&cfg)?;
    let schema = DatasetSchema::for_config(&cfg);
    println!(
        "{} matches, {} feature columns (first: {})",
        samples.len(),
        schema.feature_names.len(),
        schema.feature_names[..5].join(", ")
    );

    println!("minute  tau    mean |p_true - 0.5|  red win rate");
    for (lo, hi) in [(1.0, 5.0), (5.0, 10.0), (10.0, 20.0), (20.0, 30.0), (30.0, 41.0)] {
        let group: Vec<_> = samples
            .iter()
            .filter(|s| s.features[0] >= lo && s.features[0] < hi)
            .collect();
        let n = group.len() as f64;
        let decisive = group.iter().map(|s| (s.p_true.unwrap() - 0.5).abs()).sum::<f64>() / n;
        let wins = group.iter().map(|s| s.label as f64).sum::<f64>() / n;
        println!(
            "{:>2}-{:<3}  {:.3}  {:>19.3}  {:>12.3}",
            lo,
            hi - 1.0,
            cfg.noise_temperature(0.5 * (lo + hi)),
            decisive,
            wins
        );
    }

    // the best any model can do is predict the argmax of p_true
    let bayes = samples
        .iter()
        .filter(|s| usize::from(s.p_true.unwrap() > 0.5) == s.label)
        .count() as f64
        / samples.len() as f64;
    println!("Bayes accuracy {:.2}%", 100.0 * bayes);
    Ok(())
}
