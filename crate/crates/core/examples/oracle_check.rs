//! Closed forms against the simulate-observe-infer pipeline.
//!
//! ```text
//! cargo run --release --example oracle_check -- 200000
//! ```

use vesar::estimands::{infrequent_observed_mu, DurationModelParams};
use vesar::harness::validate::validation_suite;
use vesar::harness::{mc_oracle_with, McOptions, Pipeline, SeMethod};

fn main() -> vesar::Result<()> {
    let units = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    for c in validation_suite(units, 1, None)? {
        println!(
            "{} {:<40} expected {:.4} simulated {:.4} se {:.4}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.expected,
            c.simulated,
            c.se
        );
    }

    // delta-method and bootstrap standard errors side by side
    let d = DurationModelParams::default();
    let p = Pipeline::scheduled_reference(d, 10.0);
    let delta = mc_oracle_with(&p, units, &McOptions::new(2))?;
    let boot = mc_oracle_with(
        &p,
        units,
        &McOptions {
            se_method: SeMethod::Bootstrap { reps: 200 },
            ..McOptions::new(2)
        },
    )?;
    println!(
        "k=10: analytic {:.4}, simulated {:.4}, delta se {:.4}, bootstrap se {:.4}",
        1.0 - infrequent_observed_mu(10.0, &d)?,
        delta.estimate,
        delta.se,
        boot.se
    );
    Ok(())
}
