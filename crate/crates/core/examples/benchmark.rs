//! Runs the synthetic transfer benchmark and prints a summary.
//!
//! `cargo run --release --example benchmark` runs the tiny configuration;
//! pass `full` or a path to a JSON `BenchConfig` for larger runs.

use nlu_bootstrap::bench::{self, BenchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cfg = match std::env::args().nth(1).as_deref() {
        None | Some("tiny") => BenchConfig::tiny(),
        Some("full") => BenchConfig::default(),
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
    };
    let report = bench::run(&cfg)?;
    print!("{}", report.summary());
    Ok(())
}
