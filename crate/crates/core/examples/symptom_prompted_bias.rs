//! Target vs actual VE-SAR when only symptomatic cases get tested.
//!
//! ```text
//! cargo run --example symptom_prompted_bias
//! ```

use vesar::estimands::{invert_target_to_nu, symptom_prompted_actual_mu, SymptomModelParams};

fn main() -> vesar::Result<()> {
    let base = SymptomModelParams::default();
    println!(
        "lambda = {}, rho = {}: vaccinated primaries are symptomatic {:.0}% as often",
        base.lambda_symptom(),
        base.rho_symptom(),
        100.0 * base.lambda_symptom()
    );
    println!("{:>8} {:>8} {:>8} {:>8}", "target", "delta", "nu", "actual");
    for target in [0.3, 0.5, 0.7, 0.9] {
        for delta in [0.25, 0.5, 0.75, 1.0] {
            match invert_target_to_nu(target, base.lambda_symptom(), delta, base.rho_symptom()) {
                Ok(nu) => {
                    let p = base.with_delta(delta)?.with_nu(nu)?;
                    let actual = 1.0 - symptom_prompted_actual_mu(&p);
                    println!("{target:>8.2} {delta:>8.2} {nu:>8.4} {actual:>8.4}");
                }
                Err(e) => println!("{target:>8.2} {delta:>8.2} {:>8} ({e})", "-"),
            }
        }
    }
    Ok(())
}
