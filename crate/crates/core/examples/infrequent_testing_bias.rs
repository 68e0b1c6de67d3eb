//! Inferred VE-SAR as the testing interval grows, with shorter infections in
//! vaccinated primaries.
//!
//! ```text
//! cargo run --example infrequent_testing_bias
//! ```

use vesar::estimands::{
    infrequent_observed_mu, infrequent_target_mu, interval_regime, sampling_fraction, DurationModelParams,
};

fn main() -> vesar::Result<()> {
    let d = DurationModelParams::default();
    println!(
        "rho0 = {}, rho1 = {}, c = {}, nu = {}: target VE {:.4}",
        d.rho0(),
        d.rho1(),
        d.c(),
        d.nu_daily(),
        1.0 - infrequent_target_mu(&d)
    );
    println!("{:>4} {:>10} {:>10} {:>10} {:>12}", "k", "S_k(unvax)", "S_k(vax)", "inferred", "regime(vax)");
    for k in [1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 14.0, 15.0, 18.0, 21.0, 25.0, 30.0] {
        println!(
            "{k:>4} {:>10.4} {:>10.4} {:>10.4} {:>12}",
            sampling_fraction(k, d.rho0(), d.c())?,
            sampling_fraction(k, d.rho1(), d.c())?,
            1.0 - infrequent_observed_mu(k, &d)?,
            format!("{:?}", interval_regime(k, d.rho1(), d.c())),
        );
    }
    Ok(())
}
