//! Scenario files: flat `key = value` lines with dotted section names.
//!
//! ```text
//! # interval sweep
//! scenario.id    = infrequent
//! scenario.seed  = 20220301
//! scenario.units = 100000
//! unit.transmission = linear
//! policy.kind     = scheduled
//! policy.interval = 7
//! filter.preset   = maximal
//! filter.index    = enrolled
//! sweep.param = policy.interval
//! sweep.grid  = 1, 3, 7, 10, 14
//! ```
//!
//! `#` starts a comment. Grids are comma lists. Any scalar key can be the
//! sweep parameter; each grid value is substituted and the whole scenario is
//! validated again.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::estimands::{DurationModelParams, SymptomModelParams};
use crate::infer::{AttributionWindow, IndexRule, StudyDesignFilter, WindowAnchor};
use crate::observe::{PhaseMode, PolicyKind, TestingPolicy, DEFAULT_HORIZON_DAYS};
use crate::simcore::{IncubationModel, TransmissionMode, TransmissionTiming, UnitConfig};

use super::oracle::{Pipeline, SeMethod};

pub const KNOWN_KEYS: &[&str] = &[
    "scenario.id",
    "scenario.seed",
    "scenario.units",
    "scenario.threads",
    "scenario.se",
    "scenario.bootstrap_reps",
    "unit.size",
    "unit.p_primary_vaccinated",
    "unit.contacts_vaccinated",
    "unit.incubation_mean",
    "unit.incubation_log_sd",
    "unit.community_hazard",
    "unit.community_horizon",
    "unit.contact_to_contact",
    "unit.transmission",
    "unit.timing",
    "symptom.lambda",
    "symptom.delta",
    "symptom.nu",
    "symptom.rho",
    "symptom.tau",
    "symptom.target_ve",
    "duration.rho0",
    "duration.rho1",
    "duration.c",
    "duration.nu",
    "duration.tau0",
    "duration.target_ve",
    "policy.kind",
    "policy.delay",
    "policy.interval",
    "policy.participation",
    "policy.horizon",
    "policy.phase",
    "filter.preset",
    "filter.window",
    "filter.coprimary_days",
    "filter.require_contact_tested",
    "filter.anchor",
    "filter.index",
    "sweep.param",
    "sweep.grid",
    "output.path",
];

/// Parsed `key = value` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvConfig {
    entries: BTreeMap<String, String>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::ConfigSyntax {
                line,
                reason: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
                return Err(Error::ConfigSyntax {
                    line,
                    reason: format!("malformed key `{key}`"),
                });
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::ConfigSyntax {
                    line,
                    reason: format!("unknown key `{key}`"),
                });
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::ConfigSyntax {
                    line,
                    reason: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn remove(&mut self, key: &str) {
        self.entries.remove(key);
    }
}

fn field_err(field: &str, reason: impl Into<String>) -> Error {
    Error::ConfigField {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Re-labels a parameter validation error with the config key it came from.
fn at(field: &str) -> impl FnOnce(Error) -> Error + '_ {
    move |e| match e {
        Error::InvalidParameter { reason, .. } => field_err(field, reason),
        other => other,
    }
}

struct Reader<'a>(&'a KvConfig);

impl Reader<'_> {
    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| field_err(key, format!("cannot parse `{v}`"))),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn choice<'k>(&self, key: &str, options: &[&'k str], default: &'k str) -> Result<&'k str> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => options
                .iter()
                .find(|o| **o == v)
                .copied()
                .ok_or_else(|| field_err(key, format!("`{v}` is not one of {}", options.join("|")))),
        }
    }
}

pub fn parse_grid(key: &str, text: &str) -> Result<Vec<String>> {
    let grid: Vec<String> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();
    if grid.is_empty() {
        return Err(field_err(key, "grid is empty"));
    }
    Ok(grid)
}

pub fn parse_f64_grid(key: &str, text: &str) -> Result<Vec<f64>> {
    parse_grid(key, text)?
        .iter()
        .map(|s| s.parse().map_err(|_| field_err(key, format!("cannot parse `{s}`"))))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub param: String,
    pub grid: Vec<String>,
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub id: String,
    pub seed: u64,
    pub units_per_arm: u64,
    pub threads: Option<usize>,
    pub se_method: SeMethod,
    pub pipeline: Pipeline,
    pub sweep: Option<SweepAxis>,
    pub output: Option<PathBuf>,
    kv: KvConfig,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_kv(KvConfig::parse(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn from_kv(kv: KvConfig) -> Result<Self> {
        let r = Reader(&kv);
        let seed = r
            .parsed::<u64>("scenario.seed")?
            .ok_or_else(|| field_err("scenario.seed", "is required"))?;
        let threads = r.parsed::<usize>("scenario.threads")?;
        if threads == Some(0) {
            return Err(field_err("scenario.threads", "must be >= 1"));
        }
        let se_method = match r.choice("scenario.se", &["delta", "bootstrap"], "delta")? {
            "bootstrap" => SeMethod::Bootstrap {
                reps: r.parsed("scenario.bootstrap_reps")?.unwrap_or(200),
            },
            _ => SeMethod::DeltaLogRatio,
        };
        let sweep = match (kv.get("sweep.param"), kv.get("sweep.grid")) {
            (None, None) => None,
            (Some(param), Some(grid)) => {
                if !KNOWN_KEYS.contains(&param) || param.starts_with("sweep.") || param.starts_with("scenario.") {
                    return Err(field_err("sweep.param", format!("`{param}` cannot be swept")));
                }
                Some(SweepAxis {
                    param: param.to_string(),
                    grid: parse_grid("sweep.grid", grid)?,
                })
            }
            (Some(_), None) => return Err(field_err("sweep.grid", "is required with sweep.param")),
            (None, Some(_)) => return Err(field_err("sweep.param", "is required with sweep.grid")),
        };
        // the base pipeline is the first feasible grid point
        let pipeline = match &sweep {
            None => build_pipeline(&kv)?,
            Some(axis) => {
                let mut base = None;
                for value in &axis.grid {
                    let mut point = kv.clone();
                    point.set(&axis.param, value.clone());
                    // an infeasible target becomes a flagged row, anything else is a config error
                    match build_pipeline(&point) {
                        Ok(p) => {
                            base.get_or_insert(p);
                        }
                        Err(Error::InfeasibleTarget { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
                match base {
                    Some(p) => p,
                    None => {
                        let mut rest = kv.clone();
                        rest.remove(&axis.param);
                        build_pipeline(&rest)?
                    }
                }
            }
        };
        Ok(Self {
            id: kv.get("scenario.id").unwrap_or("scenario").to_string(),
            seed,
            units_per_arm: r.parsed("scenario.units")?.unwrap_or(0),
            threads,
            se_method,
            pipeline,
            sweep,
            output: kv.get("output.path").map(PathBuf::from),
            kv,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.kv.set("scenario.seed", seed.to_string());
        self
    }

    pub fn with_units(mut self, units: u64) -> Self {
        self.units_per_arm = units;
        self.kv.set("scenario.units", units.to_string());
        self
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    /// Pipelines for every sweep point, in grid order, as `(value, pipeline)`.
    pub fn points(&self) -> Vec<(Option<String>, Result<Pipeline>)> {
        match &self.sweep {
            None => vec![(None, Ok(self.pipeline.clone()))],
            Some(axis) => axis
                .grid
                .iter()
                .map(|v| {
                    let mut kv = self.kv.clone();
                    kv.set(&axis.param, v.clone());
                    (Some(v.clone()), build_pipeline(&kv))
                })
                .collect(),
        }
    }
}

fn build_symptom(r: &Reader) -> Result<SymptomModelParams> {
    let d = SymptomModelParams::default();
    let mut p = SymptomModelParams::new(
        r.f64_or("symptom.lambda", d.lambda_symptom())?,
        r.f64_or("symptom.delta", d.delta())?,
        r.f64_or("symptom.nu", d.nu())?,
        r.f64_or("symptom.rho", d.rho_symptom())?,
        r.f64_or("symptom.tau", d.tau())?,
    )
    .map_err(|e| match e {
        Error::InvalidParameter { name, reason } => field_err(&symptom_key(name), reason),
        other => other,
    })?;
    if let Some(ve) = r.parsed::<f64>("symptom.target_ve")? {
        if r.0.get("symptom.nu").is_some() {
            return Err(field_err("symptom.target_ve", "set either symptom.nu or symptom.target_ve"));
        }
        p = p.with_target_ve(ve).map_err(at("symptom.target_ve"))?;
    }
    Ok(p)
}

fn symptom_key(name: &str) -> String {
    match name {
        "lambda_symptom" => "symptom.lambda".into(),
        "rho_symptom" => "symptom.rho".into(),
        other => format!("symptom.{other}"),
    }
}

fn build_duration(r: &Reader) -> Result<DurationModelParams> {
    let d = DurationModelParams::default();
    let mut p = DurationModelParams::new(
        r.f64_or("duration.rho0", d.rho0())?,
        r.f64_or("duration.rho1", d.rho1())?,
        r.f64_or("duration.c", d.c())?,
        r.f64_or("duration.nu", d.nu_daily())?,
        r.f64_or("duration.tau0", d.tau0())?,
    )
    .map_err(|e| match e {
        Error::InvalidParameter { name, reason } => {
            let key = if name == "nu_daily" { "duration.nu".to_string() } else { format!("duration.{name}") };
            field_err(&key, reason)
        }
        other => other,
    })?;
    if let Some(ve) = r.parsed::<f64>("duration.target_ve")? {
        if r.0.get("duration.nu").is_some() {
            return Err(field_err("duration.target_ve", "set either duration.nu or duration.target_ve"));
        }
        p = p.with_target_ve(ve).map_err(at("duration.target_ve"))?;
    }
    Ok(p)
}

fn build_unit(r: &Reader) -> Result<UnitConfig> {
    let d = UnitConfig::default();
    let unit = UnitConfig {
        unit_size: r.parsed("unit.size")?.unwrap_or(d.unit_size),
        p_primary_vaccinated: r.f64_or("unit.p_primary_vaccinated", d.p_primary_vaccinated)?,
        contacts_vaccinated: r.bool_or("unit.contacts_vaccinated", d.contacts_vaccinated)?,
        symptom: build_symptom(r)?,
        duration: build_duration(r)?,
        incubation: IncubationModel {
            mean_days: r.f64_or("unit.incubation_mean", d.incubation.mean_days)?,
            log_sd: r.f64_or("unit.incubation_log_sd", d.incubation.log_sd)?,
        },
        community_daily_hazard: r.f64_or("unit.community_hazard", d.community_daily_hazard)?,
        community_horizon_days: r.f64_or("unit.community_horizon", d.community_horizon_days)?,
        contact_to_contact: r.bool_or("unit.contact_to_contact", d.contact_to_contact)?,
        transmission_mode: match r.choice("unit.transmission", &["bernoulli", "hazard", "linear"], "bernoulli")? {
            "hazard" => TransmissionMode::PerDayHazard,
            "linear" => TransmissionMode::LinearHazard,
            _ => TransmissionMode::PerUnitBernoulli,
        },
        transmission_timing: match r.choice("unit.timing", &["uniform", "exponential"], "uniform")? {
            "exponential" => TransmissionTiming::ExponentialFirstEvent,
            _ => TransmissionTiming::Uniform,
        },
    };
    unit.validate().map_err(|e| match e {
        Error::InvalidParameter { name, reason } => {
            let key = match name {
                "unit_size" => "unit.size",
                "p_primary_vaccinated" => "unit.p_primary_vaccinated",
                "incubation_mean_days" => "unit.incubation_mean",
                "incubation_log_sd" => "unit.incubation_log_sd",
                "community_daily_hazard" => "unit.community_hazard",
                _ => "unit.community_horizon",
            };
            field_err(key, reason)
        }
        other => other,
    })?;
    Ok(unit)
}

fn build_policy(r: &Reader) -> Result<TestingPolicy> {
    let delay = r.f64_or("policy.delay", 0.0)?;
    let interval = || -> Result<f64> {
        r.parsed("policy.interval")?
            .ok_or_else(|| field_err("policy.interval", "is required for scheduled testing"))
    };
    let kind = match r.choice("policy.kind", &["symptom", "scheduled", "symptom+scheduled", "none"], "symptom")? {
        "scheduled" => PolicyKind::Scheduled {
            interval_days: interval()?,
        },
        "symptom+scheduled" => PolicyKind::SymptomPlusScheduled {
            delay_days: delay,
            interval_days: interval()?,
        },
        "none" => PolicyKind::NoTesting,
        _ => PolicyKind::SymptomPrompted { delay_days: delay },
    };
    let policy = TestingPolicy {
        kind,
        participation: r.f64_or("policy.participation", 1.0)?,
        phase: match r.choice("policy.phase", &["person", "unit"], "person")? {
            "unit" => PhaseMode::SharedPerUnit,
            _ => PhaseMode::PerPerson,
        },
        horizon_days: r.f64_or("policy.horizon", DEFAULT_HORIZON_DAYS)?,
    };
    policy.validate().map_err(|e| match e {
        Error::InvalidParameter { name, reason } => {
            let key = match name {
                "delay_days" => "policy.delay",
                "interval_k" => "policy.interval",
                "participation" => "policy.participation",
                _ => "policy.horizon",
            };
            field_err(key, reason)
        }
        other => other,
    })?;
    Ok(policy)
}

fn build_filter(r: &Reader, horizon: f64) -> Result<StudyDesignFilter> {
    let mut f = match r.choice("filter.preset", &["maximal", "harris", "eyre", "gier", "lyngse"], "maximal")? {
        "harris" => StudyDesignFilter::harris(),
        "eyre" => StudyDesignFilter::eyre(),
        "gier" => StudyDesignFilter::gier(),
        "lyngse" => StudyDesignFilter::lyngse(),
        _ => StudyDesignFilter::maximal(horizon),
    };
    if let Some(w) = r.0.get("filter.window") {
        let bounds: Vec<i64> = parse_grid("filter.window", w)?
            .iter()
            .map(|s| s.parse().map_err(|_| field_err("filter.window", format!("cannot parse `{s}` as whole days"))))
            .collect::<Result<_>>()?;
        let [lo, hi] = bounds[..] else {
            return Err(field_err("filter.window", "expected `lo, hi`"));
        };
        f.attribution_window = AttributionWindow::new(lo, hi).map_err(at("filter.window"))?;
    }
    if let Some(v) = r.0.get("filter.coprimary_days") {
        f.coprimary_exclusion_days = if v == "none" {
            None
        } else {
            Some(v.parse().map_err(|_| field_err("filter.coprimary_days", format!("cannot parse `{v}`")))?)
        };
    }
    f.require_contact_tested = r.bool_or("filter.require_contact_tested", f.require_contact_tested)?;
    if r.0.get("filter.anchor").is_some() {
        f.anchor = match r.choice("filter.anchor", &["test", "onset"], "test")? {
            "onset" => WindowAnchor::OnsetTime,
            _ => WindowAnchor::TestTime,
        };
    }
    if r.0.get("filter.index").is_some() {
        f.index_rule = match r.choice("filter.index", &["first", "enrolled"], "first")? {
            "enrolled" => IndexRule::EnrolledPrimary,
            _ => IndexRule::FirstPositive,
        };
    }
    Ok(f)
}

pub fn build_pipeline(kv: &KvConfig) -> Result<Pipeline> {
    let r = Reader(kv);
    let unit = build_unit(&r)?;
    let policy = build_policy(&r)?;
    let filter = build_filter(&r, policy.horizon_days)?;
    Ok(Pipeline { unit, policy, filter })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_file() {
        let c = ScenarioConfig::parse("scenario.seed = 7\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.units_per_arm, 0);
        assert_eq!(c.pipeline.unit, UnitConfig::default());
        assert_eq!(c.id, "scenario");
    }

    #[test]
    fn seed_is_mandatory() {
        let e = ScenarioConfig::parse("scenario.units = 10").unwrap_err();
        assert_eq!(
            e,
            Error::ConfigField {
                field: "scenario.seed".into(),
                reason: "is required".into()
            }
        );
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let e = KvConfig::parse("scenario.seed = 1\n\nnonsense\n").unwrap_err();
        assert!(matches!(e, Error::ConfigSyntax { line: 3, .. }));
        let e = KvConfig::parse("scenario.seed = 1\nscenario.seed = 2").unwrap_err();
        assert!(matches!(e, Error::ConfigSyntax { line: 2, .. }));
        let e = KvConfig::parse("bogus.key = 1").unwrap_err();
        assert!(matches!(e, Error::ConfigSyntax { line: 1, .. }));
    }

    #[test]
    fn field_level_messages() {
        let e = ScenarioConfig::parse("scenario.seed = 1\nsymptom.delta = 1.5").unwrap_err();
        assert!(matches!(&e, Error::ConfigField { field, .. } if field == "symptom.delta"), "{e}");
        let e = ScenarioConfig::parse("scenario.seed = 1\npolicy.kind = scheduled").unwrap_err();
        assert!(matches!(&e, Error::ConfigField { field, .. } if field == "policy.interval"), "{e}");
        let e = ScenarioConfig::parse("scenario.seed = 1\nfilter.window = 3, 1").unwrap_err();
        assert!(matches!(&e, Error::ConfigField { field, .. } if field == "filter.window"), "{e}");
        let e = ScenarioConfig::parse("scenario.seed = 1\nunit.transmission = magic").unwrap_err();
        assert!(matches!(&e, Error::ConfigField { field, .. } if field == "unit.transmission"), "{e}");
        let e = ScenarioConfig::parse("scenario.seed = 1\nsweep.param = policy.interval").unwrap_err();
        assert!(matches!(&e, Error::ConfigField { field, .. } if field == "sweep.grid"), "{e}");
    }

    #[test]
    fn full_scenario() {
        let text = "
            scenario.id = infrequent   # comment
            scenario.seed = 11
            scenario.units = 500
            unit.transmission = linear
            duration.target_ve = 0.6
            policy.kind = scheduled
            policy.interval = 7
            filter.preset = lyngse
            filter.index = enrolled
            filter.window = -5, 20
            sweep.param = policy.interval
            sweep.grid = 1, 3,7
        ";
        let c = ScenarioConfig::parse(text).unwrap();
        assert_eq!(c.id, "infrequent");
        assert_eq!(c.units_per_arm, 500);
        let p = &c.pipeline;
        assert_eq!(p.unit.transmission_mode, TransmissionMode::LinearHazard);
        assert!((p.unit.duration.nu_daily() - 0.7).abs() < 1e-12);
        assert_eq!(p.filter.attribution_window, AttributionWindow { lo: -5, hi: 20 });
        assert_eq!(p.filter.coprimary_exclusion_days, Some(0));
        assert_eq!(p.filter.index_rule, IndexRule::EnrolledPrimary);
        let points = c.points();
        assert_eq!(points.len(), 3);
        let p3 = points[1].1.as_ref().unwrap();
        assert_eq!(p3.policy.kind, PolicyKind::Scheduled { interval_days: 3.0 });
    }

    #[test]
    fn infeasible_sweep_points_survive_parsing() {
        let text = "scenario.seed = 1\nsweep.param = duration.target_ve\nsweep.grid = 0.2, 0.6";
        let c = ScenarioConfig::parse(text).unwrap();
        let points = c.points();
        assert!(matches!(points[0].1, Err(Error::InfeasibleTarget { .. })));
        assert!(points[1].1.is_ok());
    }

    #[test]
    fn nu_and_target_are_exclusive() {
        let e = ScenarioConfig::parse("scenario.seed = 1\nsymptom.nu = 0.5\nsymptom.target_ve = 0.5").unwrap_err();
        assert!(matches!(&e, Error::ConfigField { field, .. } if field == "symptom.target_ve"));
    }
}
