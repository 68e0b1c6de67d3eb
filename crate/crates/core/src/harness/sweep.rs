//! Scenario runs and the figure sweeps.

use crate::error::{Error, Result};
use crate::estimands::{
    infrequent_observed_mu, infrequent_target_mu, invert_target_to_nu, symptom_prompted_actual_mu,
    symptom_prompted_target_mu, DurationModelParams, SymptomModelParams,
};
use crate::observe::PolicyKind;
use crate::simcore::{TransmissionMode, UnitConfig};

use super::config::ScenarioConfig;
use super::csv::{format_g12, ResultRow};
use super::oracle::{run_pipeline, summarize, McOptions, Pipeline, SeMethod};

/// Monte Carlo settings for a sweep; `units_per_arm = 0` means analytic only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepMc {
    pub units_per_arm: u64,
    pub seed: u64,
    pub threads: Option<usize>,
    pub se_method: SeMethod,
}

impl SweepMc {
    pub fn new(units_per_arm: u64, seed: u64) -> Self {
        Self {
            units_per_arm,
            seed,
            threads: None,
            se_method: SeMethod::DeltaLogRatio,
        }
    }

    fn options(&self, stream: u64) -> McOptions {
        McOptions {
            seed: self.seed,
            stream,
            threads: self.threads,
            se_method: self.se_method,
        }
    }
}

/// Target VE implied by the truth model alone, when it has a closed form.
pub fn analytic_target_ve(unit: &UnitConfig) -> Option<f64> {
    match unit.transmission_mode {
        TransmissionMode::PerUnitBernoulli => symptom_prompted_target_mu(&unit.symptom).ok().map(|mu| 1.0 - mu),
        TransmissionMode::LinearHazard => Some(1.0 - infrequent_target_mu(&unit.duration)),
        TransmissionMode::PerDayHazard => {
            // E[1 - exp(-tau N)] for N ~ Uniform(rho - c, rho + c)
            let d = &unit.duration;
            let p = |v: bool| {
                let (tau, rho, c) = (d.daily_hazard(v), d.mean_duration(v), d.c());
                if tau == 0.0 {
                    return 0.0;
                }
                1.0 - ((-tau * (rho - c)).exp() - (-tau * (rho + c)).exp()) / (2.0 * c * tau)
            };
            Some(1.0 - p(true) / p(false))
        }
    }
}

/// Actual VE the naive estimator converges to, when the pipeline matches one
/// of the closed-form regimes.
pub fn analytic_actual_ve(p: &Pipeline) -> Option<f64> {
    match (p.policy.kind, p.unit.transmission_mode) {
        (PolicyKind::SymptomPrompted { .. }, TransmissionMode::PerUnitBernoulli) => {
            Some(1.0 - symptom_prompted_actual_mu(&p.unit.symptom))
        }
        (PolicyKind::Scheduled { interval_days }, TransmissionMode::LinearHazard) => {
            infrequent_observed_mu(interval_days, &p.unit.duration).ok().map(|mu| 1.0 - mu)
        }
        _ => None,
    }
}

fn transmission_ratio(unit: &UnitConfig) -> f64 {
    match unit.transmission_mode {
        TransmissionMode::PerUnitBernoulli => unit.symptom.nu(),
        _ => unit.duration.nu_daily(),
    }
}

fn fill_mc(row: &mut ResultRow, p: &Pipeline, mc: &SweepMc, stream: u64) -> Result<()> {
    if mc.units_per_arm == 0 {
        return Ok(());
    }
    let opts = mc.options(stream);
    let tally = run_pipeline(p, mc.units_per_arm, &opts)?;
    row.n_units = mc.units_per_arm;
    row.excluded_no_index = tally.exclusions.no_index;
    row.excluded_coprimary = tally.exclusions.coprimary;
    row.excluded_no_contacts = tally.exclusions.no_contacts_at_risk;
    match summarize(tally, mc.units_per_arm, &opts) {
        Ok(est) => {
            row.actual_ve_mc = Some(est.estimate);
            row.mc_se = Some(est.se);
            row.true_ve_mc = est.true_ve;
        }
        Err(e @ (Error::UndefinedVe | Error::InsufficientData { .. })) => {
            row.status = format!("degenerate: {e}");
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

/// Runs every point of a scenario. Deterministic in `(config, seed)`; with
/// zero units per arm nothing is simulated and no rows are produced.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<ResultRow>> {
    if cfg.units_per_arm == 0 {
        return Ok(Vec::new());
    }
    let mc = SweepMc {
        units_per_arm: cfg.units_per_arm,
        seed: cfg.seed,
        threads: cfg.threads,
        se_method: cfg.se_method,
    };
    let sweep_param = cfg.sweep.as_ref().map(|s| s.param.clone()).unwrap_or_default();
    let mut rows = Vec::new();
    for (i, (value, pipeline)) in cfg.points().into_iter().enumerate() {
        let mut row = ResultRow {
            scenario_id: cfg.id.clone(),
            sweep_param: sweep_param.clone(),
            sweep_value: value.unwrap_or_default(),
            status: "ok".into(),
            ..ResultRow::default()
        };
        match pipeline {
            Ok(p) => {
                row.target_ve = analytic_target_ve(&p.unit);
                row.actual_ve_analytic = analytic_actual_ve(&p);
                row.nu = Some(transmission_ratio(&p.unit));
                if p.unit.transmission_mode == TransmissionMode::PerUnitBernoulli {
                    row.one_minus_delta = Some(1.0 - p.unit.symptom.delta());
                }
                fill_mc(&mut row, &p, &mc, i as u64)?;
            }
            Err(e @ Error::InfeasibleTarget { .. }) => row.status = format!("infeasible: {e}"),
            Err(e) => return Err(e),
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Default axes for the symptom-prompted figure: target VE in steps of 0.05
/// and six asymptomatic transmission ratios.
pub fn figure_1a_grid() -> (Vec<f64>, Vec<f64>) {
    let targets = (0..=20).map(|i| i as f64 * 0.05).collect();
    let deltas = vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
    (targets, deltas)
}

/// Default axes for the infrequent-testing figures.
pub fn figure_1b_grid() -> (Vec<f64>, Vec<f64>) {
    ((1..=15).map(f64::from).collect(), vec![0.5, 0.6, 0.7, 0.8, 0.9])
}

pub fn figure_a1_grid() -> (Vec<f64>, Vec<f64>) {
    ((1..=30).map(f64::from).collect(), vec![0.5, 0.6, 0.7, 0.8, 0.9])
}

/// Symptom-prompted sweep over `(target VE, delta)`. Each row carries the
/// target, `1 - delta` and the actual estimand `1 - nu`.
pub fn sweep_figure_1a(
    base: &SymptomModelParams,
    targets: &[f64],
    deltas: &[f64],
    mc: Option<&SweepMc>,
) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::with_capacity(targets.len() * deltas.len());
    let mut stream = 0u64;
    for &delta in deltas {
        for &target in targets {
            let mut row = ResultRow {
                scenario_id: "fig1a".into(),
                sweep_param: "delta".into(),
                sweep_value: format_g12(delta),
                target_ve: Some(target),
                one_minus_delta: Some(1.0 - delta),
                status: "ok".into(),
                ..ResultRow::default()
            };
            let nu = base
                .with_delta(delta)
                .and_then(|p| invert_target_to_nu(target, p.lambda_symptom(), delta, p.rho_symptom()));
            match nu {
                Ok(nu) => {
                    let params = base.with_delta(delta)?.with_nu(nu)?;
                    row.nu = Some(nu);
                    row.actual_ve_analytic = Some(1.0 - symptom_prompted_actual_mu(&params));
                    if let Some(mc) = mc {
                        fill_mc(&mut row, &Pipeline::symptom_prompted_reference(params), mc, stream)?;
                    }
                }
                Err(e @ (Error::InfeasibleTarget { .. } | Error::Degenerate)) => {
                    row.status = format!("infeasible: {e}");
                }
                Err(e) => return Err(e),
            }
            stream += 1;
            rows.push(row);
        }
    }
    Ok(rows)
}

fn sweep_interval(
    id: &str,
    base: &DurationModelParams,
    intervals: &[f64],
    targets: &[f64],
    mc: Option<&SweepMc>,
) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    let mut stream = 0u64;
    for &target in targets {
        for &k in intervals {
            let mut row = ResultRow {
                scenario_id: id.into(),
                sweep_param: "interval_k".into(),
                sweep_value: format_g12(k),
                target_ve: Some(target),
                status: "ok".into(),
                ..ResultRow::default()
            };
            match base.with_target_ve(target) {
                Ok(d) => {
                    row.nu = Some(d.nu_daily());
                    row.actual_ve_analytic = Some(1.0 - infrequent_observed_mu(k, &d)?);
                    if let Some(mc) = mc {
                        fill_mc(&mut row, &Pipeline::scheduled_reference(d, k), mc, stream)?;
                    }
                }
                Err(e @ Error::InfeasibleTarget { .. }) => row.status = format!("infeasible: {e}"),
                Err(e) => return Err(e),
            }
            stream += 1;
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Infrequent-testing sweep restricted to intervals no longer than the
/// longest vaccinated infection (`rho1 + c`).
pub fn sweep_figure_1b(
    base: &DurationModelParams,
    intervals: &[f64],
    targets: &[f64],
    mc: Option<&SweepMc>,
) -> Result<Vec<ResultRow>> {
    let max_k = base.rho1() + base.c();
    let ks: Vec<f64> = intervals.iter().copied().filter(|&k| k <= max_k).collect();
    sweep_interval("fig1b", base, &ks, targets, mc)
}

/// Infrequent-testing sweep over any intervals, including the flat tail past
/// the longest infection.
pub fn sweep_figure_a1(
    base: &DurationModelParams,
    intervals: &[f64],
    targets: &[f64],
    mc: Option<&SweepMc>,
) -> Result<Vec<ResultRow>> {
    sweep_interval("figA1", base, intervals, targets, mc)
}
