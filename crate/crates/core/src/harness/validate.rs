//! Oracle-vs-analytic checks behind the `validate` subcommand.

use crate::error::Result;
use crate::estimands::{
    infrequent_observed_mu, infrequent_target_mu, symptom_prompted_actual_mu, symptom_prompted_target_mu,
    DurationModelParams, SymptomModelParams,
};
use crate::simcore::{TransmissionMode, UnitConfig};

use super::oracle::{mc_oracle_with, McOptions, Pipeline};

/// Passing band in Monte Carlo standard errors.
pub const SE_MULTIPLIER: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub simulated: f64,
    pub se: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, expected: f64, simulated: f64, se: f64) -> Self {
        Self {
            name: name.into(),
            expected,
            simulated,
            se,
            passed: (simulated - expected).abs() <= SE_MULTIPLIER * se,
        }
    }
}

/// Scheduled-testing intervals checked against the piecewise closed form.
pub const CHECK_INTERVALS: [f64; 8] = [1.0, 3.0, 7.0, 10.0, 14.0, 21.0, 25.0, 30.0];

/// Runs each bridge between a closed form and its simulation oracle.
pub fn validation_suite(units_per_arm: u64, seed: u64, threads: Option<usize>) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut stream = 0u64;
    let mut opts = || {
        stream += 1;
        McOptions::new(seed).with_stream(stream).with_threads(threads)
    };

    let s = SymptomModelParams::default();
    let est = mc_oracle_with(&Pipeline::symptom_prompted_reference(s), units_per_arm, &opts())?;
    checks.push(Check::new(
        "symptom-prompted: naive VE recovers 1 - nu",
        1.0 - symptom_prompted_actual_mu(&s),
        est.estimate,
        est.se,
    ));
    if let (Some(t), Some(se)) = (est.true_ve, est.true_se) {
        checks.push(Check::new(
            "symptom-prompted: true VE equals target 1 - mu",
            1.0 - symptom_prompted_target_mu(&s)?,
            t,
            se,
        ));
    }

    let d = DurationModelParams::default();
    for k in CHECK_INTERVALS {
        let est = mc_oracle_with(&Pipeline::scheduled_reference(d, k), units_per_arm, &opts())?;
        checks.push(Check::new(
            format!("scheduled k={k}: naive VE equals 1 - observed mu"),
            1.0 - infrequent_observed_mu(k, &d)?,
            est.estimate,
            est.se,
        ));
        if k == 1.0 {
            if let (Some(t), Some(se)) = (est.true_ve, est.true_se) {
                checks.push(Check::new(
                    "scheduled: true VE equals target 1 - lambda * nu",
                    1.0 - infrequent_target_mu(&d),
                    t,
                    se,
                ));
            }
        }
    }

    let unit = UnitConfig {
        transmission_mode: TransmissionMode::LinearHazard,
        ..UnitConfig::default()
    };
    let est = mc_oracle_with(&Pipeline::fully_observed(unit), units_per_arm, &opts())?;
    if let Some(t) = est.true_ve {
        checks.push(Check::new("fully observed: naive VE equals true VE", t, est.estimate, est.se));
    }
    Ok(checks)
}
