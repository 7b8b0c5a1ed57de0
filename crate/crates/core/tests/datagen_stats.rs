use std::collections::BTreeMap;

use calibforge::datagen::{
    dataset_from_csv, dataset_to_csv, generate_dataset, read_dataset, split, write_dataset,
    DatasetSchema, Sample, SyntheticConfig,
};
use calibforge::Error;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn small(n: usize, seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        n_matches: n,
        features: 27,
        roster_size: 10,
        seed,
        ..SyntheticConfig::default()
    }
}

/// Chi-square statistic of label counts against `p_true`, grouped into
/// deciles of `p_true`.
fn chi_square(samples: &[Sample]) -> (f64, usize) {
    let mut groups = [(0.0f64, 0.0f64, 0.0f64); 10];
    for s in samples {
        let p = s.p_true.unwrap();
        let g = ((p * 10.0) as usize).min(9);
        groups[g].0 += s.label as f64;
        groups[g].1 += p;
        groups[g].2 += p * (1.0 - p);
    }
    let used: Vec<_> = groups.iter().filter(|g| g.2 > 0.0).collect();
    let stat = used.iter().map(|(o, e, v)| (o - e) * (o - e) / v).sum();
    (stat, used.len())
}

#[test]
fn labels_follow_true_probabilities() {
    for seed in 0..20 {
        let samples = generate_dataset(&small(100_000, seed)).unwrap();
        let (stat, dof) = chi_square(&samples);
        let p_value = 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat);
        assert!(p_value > 0.001, "seed {seed}: chi2 {stat} on {dof} dof, p = {p_value}");
    }
}

#[test]
fn win_rate_and_mean_probability() {
    let samples = generate_dataset(&small(10_000, 42)).unwrap();
    let n = samples.len() as f64;
    let mean_p = samples.iter().map(|s| s.p_true.unwrap()).sum::<f64>() / n;
    let rate = samples.iter().map(|s| s.label as f64).sum::<f64>() / n;
    let se = samples.iter().map(|s| { let p = s.p_true.unwrap(); p * (1.0 - p) }).sum::<f64>().sqrt() / n;
    assert!((rate - mean_p).abs() < 3.0 * se, "{rate} vs {mean_p} (se {se})");
    assert!((mean_p - 0.5).abs() < 0.02);
    assert!(samples.iter().all(|s| { let p = s.p_true.unwrap(); p > 0.0 && p < 1.0 }));
}

#[test]
fn zero_noise_limit_is_deterministic() {
    let cfg = SyntheticConfig {
        noise_gain: 0.0,
        noise_floor: 1e-6,
        ..small(5_000, 3)
    };
    let samples = generate_dataset(&cfg).unwrap();
    let decisive: Vec<&Sample> = samples
        .iter()
        .filter(|s| { let p = s.p_true.unwrap(); !(1e-9..=1.0 - 1e-9).contains(&p) })
        .collect();
    assert!(decisive.len() > 4_900);
    for s in decisive {
        assert_eq!(s.label, usize::from(s.p_true.unwrap() > 0.5));
    }
}

#[test]
fn noise_schedule_is_monotone() {
    let cfg = SyntheticConfig::default();
    let taus: Vec<f64> = (0..=60).map(|m| cfg.noise_temperature(m as f64)).collect();
    assert!(taus.iter().all(|&t| t > 0.0));
    assert!(taus.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn csv_roundtrip_of_seeded_dataset() {
    let cfg = small(100, 8);
    let samples = generate_dataset(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    write_dataset(&path, &DatasetSchema::for_config(&cfg), &samples).unwrap();
    let (schema, back) = read_dataset(&path).unwrap();
    assert_eq!(schema.feature_names, cfg.column_names());
    assert_eq!(back.len(), samples.len());
    for (a, b) in samples.iter().zip(&back) {
        assert_eq!(a.label, b.label);
        assert!((a.p_true.unwrap() - b.p_true.unwrap()).abs() <= 1e-9);
        for (x, y) in a.features.iter().zip(&b.features) {
            assert!((x - y).abs() <= 1e-9);
        }
    }
}

#[test]
fn csv_errors_name_the_problem() {
    let cfg = small(3, 1);
    let schema = DatasetSchema::for_config(&cfg);
    let text = dataset_to_csv(&schema, &generate_dataset(&cfg).unwrap()).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("minute,gold_diff,xp_diff,kills_blue,kills_red,comp_0,"));
    assert!(header.ends_with(",filler_1,label,p_true"));

    let (_, empty) = dataset_from_csv(&format!("{header}\n")).unwrap();
    assert!(empty.is_empty());

    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<&str> = lines[2].split(',').collect();
    fields[1] = "lots";
    lines[2] = fields.join(",");
    match dataset_from_csv(&lines.join("\n")) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected parse error, got {other:?}"),
    }

    let short = format!("{header}\n1,2,3\n");
    assert!(matches!(dataset_from_csv(&short), Err(Error::Schema(_))));
}

#[test]
fn split_is_a_seeded_partition() {
    let samples = generate_dataset(&small(100, 4)).unwrap();
    let (train, val, test) = split(&samples, (0.8, 0.1, 0.1), 7).unwrap();
    assert_eq!((train.len(), val.len(), test.len()), (80, 10, 10));
    let again = split(&samples, (0.8, 0.1, 0.1), 7).unwrap();
    assert_eq!((train.clone(), val.clone(), test.clone()), again);

    let key = |s: &Sample| s.features.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let mut counts: BTreeMap<Vec<u64>, i64> = BTreeMap::new();
    for s in &samples {
        *counts.entry(key(s)).or_default() += 1;
    }
    for s in train.iter().chain(&val).chain(&test) {
        *counts.get_mut(&key(s)).unwrap() -= 1;
    }
    assert!(counts.values().all(|&c| c == 0));
    assert!(split(&samples, (0.8, 0.2, 0.1), 7).is_err());
}

#[test]
fn zero_matches_is_rejected() {
    assert!(matches!(generate_dataset(&small(0, 1)), Err(Error::InvalidArgument(_))));
}
