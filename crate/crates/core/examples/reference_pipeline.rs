//! Run the full workflow: generate data, train cross-entropy and DU models,
//! fit three scalers, evaluate all five variants and print the comparison.
//! Takes about half a minute on one core.
//!
//! ```text
//! cargo run --release --example reference_pipeline -- [out_dir] [seed]
//! ```

use std::path::PathBuf;

use calibforge::pipeline::{run_reference, ReferenceConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("calibforge_reference"));
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);

    let comparison = run_reference(&ReferenceConfig::with_seed(&out, seed))?;
    print!("{}", comparison.to_text());
    println!("artifacts in {}", out.display());
    Ok(())
}
