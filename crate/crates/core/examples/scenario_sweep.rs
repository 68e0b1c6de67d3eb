//! Runs a scenario file and prints the CSV, as `vesar simulate` does.
//!
//! ```text
//! cargo run --release --example scenario_sweep -- configs/infrequent_testing.conf 20000
//! ```

use std::path::PathBuf;

use vesar::harness::{run_scenario, to_csv_string, ScenarioConfig};

fn main() -> vesar::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/infrequent_testing.conf"));
    let mut cfg = ScenarioConfig::from_file(&path)?;
    if let Some(units) = args.next().and_then(|s| s.parse().ok()) {
        cfg = cfg.with_units(units);
    } else {
        cfg = cfg.with_units(5_000);
    }
    print!("{}", to_csv_string(&run_scenario(&cfg)?));
    Ok(())
}
