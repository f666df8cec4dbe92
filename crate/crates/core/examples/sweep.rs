//! Running an experiment config through the library and printing its summary.
//!
//! ```bash
//! cargo run --release --example sweep -- crates/core/configs/quick.toml
//! ```

use robust_bc::experiment::{run_experiment, summary_csv, ExperimentConfig};

fn main() -> robust_bc::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/quick.toml").into());
    let cfg = ExperimentConfig::load(path.as_ref())?.resolve()?;
    println!(
        "{}: {} seeds x {} arms x {} amateur counts = {} runs",
        cfg.name,
        cfg.seeds.len(),
        cfg.arms.len(),
        cfg.demos.amateur.len(),
        cfg.run_count()
    );
    let result = run_experiment(&cfg)?;
    print!("{}", summary_csv(&result));
    for f in &result.failures {
        eprintln!("failed: seed {} arm {}: {}", f.seed, f.arm, f.error);
    }
    Ok(())
}
