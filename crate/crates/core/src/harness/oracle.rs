//! Seeded Monte Carlo replication of the simulate -> observe -> infer pipeline.
//!
//! Replicate `i` of arm `a` draws from ChaCha stream `2 * i + a` under a key
//! derived from `(seed, stream)`. Per-unit results reduce into integer
//! histograms, so the outcome does not depend on the worker count or on the
//! order in which rayon schedules work.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::estimands::{DurationModelParams, SymptomModelParams};
use crate::infer::{analyze_unit, tally_analysis, ExclusionCounts, IndexRule, StudyDesignFilter};
use crate::observe::{apply_policy, PhaseMode, TestingPolicy};
use crate::simcore::{simulate_unit, tally_truth, TransmissionMode, UnitConfig};
use crate::tally::{SarPooling, TwoArmTally};

/// Smallest replicate count accepted by [`mc_oracle`].
pub const MIN_ORACLE_REPS: u64 = 10_000;

/// One complete study emulation: truth model, testing and analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub unit: UnitConfig,
    pub policy: TestingPolicy,
    pub filter: StudyDesignFilter,
}

impl Pipeline {
    pub fn validate(&self) -> Result<()> {
        self.unit.validate()?;
        self.policy.validate()
    }

    /// Symptom-prompted testing with per-unit Bernoulli transmission. The
    /// primary case is known from enrolment and every positive contact counts.
    pub fn symptom_prompted_reference(symptom: SymptomModelParams) -> Self {
        let policy = TestingPolicy::symptom_prompted(0.0);
        Self {
            unit: UnitConfig {
                symptom,
                transmission_mode: TransmissionMode::PerUnitBernoulli,
                ..UnitConfig::default()
            },
            filter: StudyDesignFilter::maximal(policy.horizon_days).with_index_rule(IndexRule::EnrolledPrimary),
            policy,
        }
    }

    /// Testing every `interval_days` with transmission linear in duration.
    /// The primary case is known from enrolment and every positive contact counts.
    pub fn scheduled_reference(duration: DurationModelParams, interval_days: f64) -> Self {
        let policy = TestingPolicy::scheduled(interval_days);
        Self {
            unit: UnitConfig {
                duration,
                transmission_mode: TransmissionMode::LinearHazard,
                ..UnitConfig::default()
            },
            filter: StudyDesignFilter::maximal(policy.horizon_days).with_index_rule(IndexRule::EnrolledPrimary),
            policy,
        }
    }

    /// Daily household-wide testing with full participation, first-positive
    /// index and a window covering the whole horizon.
    pub fn fully_observed(unit: UnitConfig) -> Self {
        let policy = TestingPolicy::scheduled(1.0).with_phase(PhaseMode::SharedPerUnit);
        Self {
            unit,
            filter: StudyDesignFilter::maximal(policy.horizon_days),
            policy,
        }
    }
}

/// Reduced results of a batch of replicates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PipelineTally {
    /// What the study analysis sees, split by index vaccination.
    pub observed: TwoArmTally,
    /// Who the primary actually infected, split by primary vaccination.
    pub truth: TwoArmTally,
    pub exclusions: ExclusionCounts,
}

impl PipelineTally {
    pub fn merge(mut self, other: PipelineTally) -> PipelineTally {
        self.observed.merge(&other.observed);
        self.truth.merge(&other.truth);
        self.exclusions.merge(&other.exclusions);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeMethod {
    #[default]
    DeltaLogRatio,
    Bootstrap { reps: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McOptions {
    pub seed: u64,
    /// Independent sub-stream, e.g. the index of a sweep point.
    pub stream: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    pub se_method: SeMethod,
}

impl McOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            stream: 0,
            threads: None,
            se_method: SeMethod::DeltaLogRatio,
        }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    pub fn with_threads(self, threads: Option<usize>) -> Self {
        Self { threads, ..self }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_key(seed: u64, stream: u64) -> [u8; 32] {
    let mut s = stream;
    let mut state = seed ^ splitmix64(&mut s);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// RNG for one replicate; a pure function of its coordinates.
pub fn replicate_rng(seed: u64, stream: u64, arm_vaccinated: bool, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(stream_key(seed, stream));
    rng.set_stream(2 * index + arm_vaccinated as u64);
    rng
}

fn run_one(p: &Pipeline, arm_cfg: &UnitConfig, rng: &mut ChaCha8Rng, acc: &mut PipelineTally) {
    let truth = simulate_unit(arm_cfg, rng);
    tally_truth(&mut acc.truth, &truth);
    let obs = apply_policy(&truth, &p.policy, rng);
    let a = analyze_unit(&obs, &p.filter);
    tally_analysis(&mut acc.observed, &mut acc.exclusions, &a);
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| invalid("threads", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs `units_per_arm` replicates with a vaccinated primary and as many with
/// an unvaccinated primary.
pub fn run_pipeline(p: &Pipeline, units_per_arm: u64, opts: &McOptions) -> Result<PipelineTally> {
    p.validate()?;
    if opts.threads == Some(0) {
        return Err(invalid("threads", "must be >= 1"));
    }
    let arms = [p.unit.for_arm(false), p.unit.for_arm(true)];
    let (seed, stream) = (opts.seed, opts.stream);
    in_pool(opts.threads, || {
        (0..units_per_arm * 2)
            .into_par_iter()
            .fold(PipelineTally::default, |mut acc, j| {
                let vaccinated = j % 2 == 1;
                let mut rng = replicate_rng(seed, stream, vaccinated, j / 2);
                run_one(p, &arms[vaccinated as usize], &mut rng, &mut acc);
                acc
            })
            .reduce(PipelineTally::default, PipelineTally::merge)
    })
}

/// Pipeline VE estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub se: f64,
    pub sar_vaccinated: f64,
    pub sar_unvaccinated: f64,
    /// VE-SAR from the ground truth of the same replicates.
    pub true_ve: Option<f64>,
    pub true_se: Option<f64>,
    pub units_per_arm: u64,
    pub tally: PipelineTally,
}

fn standard_error(t: &TwoArmTally, method: SeMethod, seed: u64, stream: u64) -> Result<f64> {
    match method {
        SeMethod::DeltaLogRatio => t.delta_se(),
        SeMethod::Bootstrap { reps } => {
            let mut rng = replicate_rng(seed, stream ^ 0xB007_5742_0000_0000, false, u64::MAX / 2);
            t.bootstrap_se(reps, &mut rng)
        }
    }
}

/// Summarises a tally. Degenerate arms surface as errors rather than NaN.
pub fn summarize(tally: PipelineTally, units_per_arm: u64, opts: &McOptions) -> Result<McEstimate> {
    let r = tally.observed.ve(SarPooling::Pooled)?;
    let se = standard_error(&tally.observed, opts.se_method, opts.seed, opts.stream)?;
    let truth = tally.truth.ve(SarPooling::Pooled).ok();
    let true_se = truth.and_then(|_| tally.truth.delta_se().ok());
    Ok(McEstimate {
        estimate: r.ve,
        se,
        sar_vaccinated: r.sar_vaccinated,
        sar_unvaccinated: r.sar_unvaccinated,
        true_ve: truth.map(|t| t.ve),
        true_se,
        units_per_arm,
        tally,
    })
}

/// Full-pipeline VE estimate from `n_reps` replicates per arm.
pub fn mc_oracle(p: &Pipeline, n_reps: u64, seed: u64) -> Result<McEstimate> {
    mc_oracle_with(p, n_reps, &McOptions::new(seed))
}

pub fn mc_oracle_with(p: &Pipeline, n_reps: u64, opts: &McOptions) -> Result<McEstimate> {
    if n_reps < MIN_ORACLE_REPS {
        return Err(invalid(
            "n_reps",
            format!("{n_reps} < {MIN_ORACLE_REPS} replicates per arm"),
        ));
    }
    let tally = run_pipeline(p, n_reps, opts)?;
    summarize(tally, n_reps, opts)
}
