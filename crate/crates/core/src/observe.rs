//! Turning ground truth into the test records a retrospective database holds.
//!
//! Tests are perfect inside the positivity window `[acquisition, acquisition + duration)`
//! and negative elsewhere. People who never test leave no records at all.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::simcore::{Person, PersonId, UnitTruth};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    /// One test per symptomatic infection, `delay_days` after onset.
    SymptomPrompted { delay_days: f64 },
    /// A test every `interval_days`, starting at a uniform random phase.
    Scheduled { interval_days: f64 },
    SymptomPlusScheduled { delay_days: f64, interval_days: f64 },
    NoTesting,
}

/// Whether scheduled tests share a phase across the unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseMode {
    #[default]
    PerPerson,
    /// Everyone in the unit is swabbed on the same days.
    SharedPerUnit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestingPolicy {
    pub kind: PolicyKind,
    /// Per-person probability of taking part in testing at all.
    pub participation: f64,
    pub phase: PhaseMode,
    /// Scheduled tests run over `[0, horizon_days)`.
    pub horizon_days: f64,
}

pub const DEFAULT_HORIZON_DAYS: f64 = 60.0;

impl TestingPolicy {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            participation: 1.0,
            phase: PhaseMode::PerPerson,
            horizon_days: DEFAULT_HORIZON_DAYS,
        }
    }

    pub fn symptom_prompted(delay_days: f64) -> Self {
        Self::new(PolicyKind::SymptomPrompted { delay_days })
    }

    pub fn scheduled(interval_days: f64) -> Self {
        Self::new(PolicyKind::Scheduled { interval_days })
    }

    pub fn none() -> Self {
        Self::new(PolicyKind::NoTesting)
    }

    pub fn with_participation(self, participation: f64) -> Self {
        Self { participation, ..self }
    }

    pub fn with_phase(self, phase: PhaseMode) -> Self {
        Self { phase, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let (delay, interval) = match self.kind {
            PolicyKind::SymptomPrompted { delay_days } => (Some(delay_days), None),
            PolicyKind::Scheduled { interval_days } => (None, Some(interval_days)),
            PolicyKind::SymptomPlusScheduled {
                delay_days,
                interval_days,
            } => (Some(delay_days), Some(interval_days)),
            PolicyKind::NoTesting => (None, None),
        };
        if let Some(d) = delay {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(invalid("delay_days", format!("{d} must be finite and >= 0")));
            }
        }
        if let Some(k) = interval {
            if !(k > 0.0 && k.is_finite()) {
                return Err(invalid("interval_k", format!("{k} must be finite and > 0")));
            }
        }
        if !(0.0..=1.0).contains(&self.participation) {
            return Err(invalid("participation", "must be in [0, 1]"));
        }
        if !(self.horizon_days > 0.0 && self.horizon_days.is_finite()) {
            return Err(invalid("horizon_days", "must be finite and > 0"));
        }
        Ok(())
    }

    fn delay(&self) -> Option<f64> {
        match self.kind {
            PolicyKind::SymptomPrompted { delay_days } | PolicyKind::SymptomPlusScheduled { delay_days, .. } => {
                Some(delay_days)
            }
            _ => None,
        }
    }

    fn interval(&self) -> Option<f64> {
        match self.kind {
            PolicyKind::Scheduled { interval_days } | PolicyKind::SymptomPlusScheduled { interval_days, .. } => {
                Some(interval_days)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestResult {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestRecord {
    pub person_id: PersonId,
    pub test_time: f64,
    pub result: TestResult,
    /// Symptom onset reported at a symptom-prompted test.
    pub reported_onset: Option<f64>,
}

impl TestRecord {
    pub fn is_positive(&self) -> bool {
        self.result == TestResult::Positive
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservedUnit {
    pub persons: Vec<Person>,
    /// Sorted by `(test_time, person_id)`.
    pub tests: Vec<TestRecord>,
    /// Primary case as recorded at enrolment. Only a prospective design
    /// would know this; retrospective analyses ignore it.
    pub enrolled_primary: PersonId,
}

impl ObservedUnit {
    pub fn person(&self, id: PersonId) -> Option<&Person> {
        self.persons.iter().find(|p| p.id == id)
    }

    pub fn first_positive(&self, id: PersonId) -> Option<&TestRecord> {
        self.tests.iter().find(|t| t.person_id == id && t.is_positive())
    }

    pub fn was_tested(&self, id: PersonId) -> bool {
        self.tests.iter().any(|t| t.person_id == id)
    }

    pub fn positives(&self) -> impl Iterator<Item = &TestRecord> {
        self.tests.iter().filter(|t| t.is_positive())
    }
}

/// Test times `phase, phase + k, phase + 2k, ...` below `horizon`.
pub fn scheduled_test_times(phase: f64, interval: f64, horizon: f64) -> impl Iterator<Item = f64> {
    (0u64..)
        .map(move |j| phase + j as f64 * interval)
        .take_while(move |&t| t < horizon)
}

/// Applies a testing policy to one unit.
///
/// Random draws, in order: a shared phase (if [`PhaseMode::SharedPerUnit`]),
/// then for each person by id a participation draw and, under scheduled
/// testing with per-person phases, a phase draw.
pub fn apply_policy<R: Rng + ?Sized>(truth: &UnitTruth, policy: &TestingPolicy, rng: &mut R) -> ObservedUnit {
    let interval = policy.interval();
    let delay = policy.delay();
    let shared_phase = match (interval, policy.phase) {
        (Some(k), PhaseMode::SharedPerUnit) => Some(rng.random::<f64>() * k),
        _ => None,
    };

    let mut tests = Vec::new();
    for person in &truth.persons {
        let participates = rng.random::<f64>() < policy.participation;
        let phase = interval.map(|k| shared_phase.unwrap_or_else(|| rng.random::<f64>() * k));
        if !participates {
            continue;
        }
        let infection = truth.infection_of(person.id);
        let result_at = |t: f64| match infection {
            Some(inf) if inf.is_active_at(t) => TestResult::Positive,
            _ => TestResult::Negative,
        };

        if let (Some(k), Some(phase)) = (interval, phase) {
            tests.extend(
                scheduled_test_times(phase, k, policy.horizon_days).map(|t| TestRecord {
                    person_id: person.id,
                    test_time: t,
                    result: result_at(t),
                    reported_onset: None,
                }),
            );
        }
        if let (Some(delay), Some(onset)) = (delay, infection.and_then(|i| i.symptom_onset_time)) {
            let t = onset + delay;
            tests.push(TestRecord {
                person_id: person.id,
                test_time: t,
                result: result_at(t),
                reported_onset: Some(onset),
            });
        }
    }
    tests.sort_by(|a, b| a.test_time.total_cmp(&b.test_time).then(a.person_id.cmp(&b.person_id)));

    ObservedUnit {
        persons: truth.persons.clone(),
        tests,
        enrolled_primary: truth.primary().person_id,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::{Infection, Source};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit(infections: Vec<Infection>, size: usize) -> UnitTruth {
        UnitTruth {
            persons: (0..size).map(|id| Person { id, vaccinated: false }).collect(),
            infections,
        }
    }

    fn inf(id: PersonId, t: f64, source: Source, onset: Option<f64>, dur: f64) -> Infection {
        Infection {
            person_id: id,
            acquisition_time: t,
            source,
            symptomatic: onset.is_some(),
            symptom_onset_time: onset,
            duration: dur,
        }
    }

    #[test]
    fn no_testing_leaves_no_records() {
        let u = unit(vec![inf(0, 0.0, Source::Seed, Some(3.0), 10.0)], 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let obs = apply_policy(&u, &TestingPolicy::none(), &mut rng);
        assert!(obs.tests.is_empty());
        assert_eq!(obs.enrolled_primary, 0);
    }

    #[test]
    fn asymptomatic_units_yield_no_symptom_prompted_positives() {
        let u = unit(
            vec![
                inf(0, 0.0, Source::Seed, None, 10.0),
                inf(2, 3.0, Source::Primary, None, 10.0),
            ],
            4,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let obs = apply_policy(&u, &TestingPolicy::symptom_prompted(0.0), &mut rng);
        assert_eq!(obs.positives().count(), 0);
    }

    #[test]
    fn symptom_prompted_test_follows_onset_and_delay() {
        let u = unit(
            vec![
                inf(0, 0.0, Source::Seed, Some(5.0), 10.0),
                // onset after positivity ends: the prompted test is negative
                inf(1, 2.0, Source::Primary, Some(14.0), 8.0),
            ],
            3,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let obs = apply_policy(&u, &TestingPolicy::symptom_prompted(1.5), &mut rng);
        assert_eq!(obs.tests.len(), 2);
        assert_eq!(obs.tests[0].person_id, 0);
        assert_eq!(obs.tests[0].test_time, 6.5);
        assert!(obs.tests[0].is_positive());
        assert_eq!(obs.tests[0].reported_onset, Some(5.0));
        assert_eq!(obs.tests[1].result, TestResult::Negative);
        assert!(!obs.was_tested(2));
    }

    #[test]
    fn zero_participation_silences_everyone() {
        let u = unit(vec![inf(0, 0.0, Source::Seed, Some(1.0), 10.0)], 4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let policy = TestingPolicy::scheduled(2.0).with_participation(0.0);
        assert!(apply_policy(&u, &policy, &mut rng).tests.is_empty());
    }

    #[test]
    fn scheduled_grid_respects_horizon() {
        let times: Vec<f64> = scheduled_test_times(0.5, 7.0, 30.0).collect();
        assert_eq!(times, vec![0.5, 7.5, 14.5, 21.5, 28.5]);
    }

    #[test]
    fn shared_phase_aligns_unit() {
        let u = unit(vec![inf(0, 0.0, Source::Seed, None, 10.0)], 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let policy = TestingPolicy::scheduled(3.0).with_phase(PhaseMode::SharedPerUnit);
        let obs = apply_policy(&u, &policy, &mut rng);
        let first: Vec<f64> = (0..3)
            .map(|id| obs.tests.iter().find(|t| t.person_id == id).unwrap().test_time)
            .collect();
        assert_eq!(first[0], first[1]);
        assert_eq!(first[1], first[2]);
    }

    #[test]
    fn policy_validation() {
        assert!(TestingPolicy::scheduled(0.0).validate().is_err());
        assert!(TestingPolicy::symptom_prompted(-1.0).validate().is_err());
        assert!(TestingPolicy::scheduled(1.0).with_participation(1.5).validate().is_err());
        assert!(TestingPolicy::scheduled(1.0).validate().is_ok());
    }
}
