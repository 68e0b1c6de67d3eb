//! Ground-truth transmission units.
//!
//! A unit is one primary case (person 0, infected at time 0) and its
//! susceptible contacts (persons `1..unit_size`). Transmission events are
//! resolved in continuous time: every infection proposes candidate infection
//! times for the people it can reach, and the earliest candidate for each
//! person wins. Nobody is infected twice.

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal};

use crate::error::{invalid, Result};
use crate::estimands::{DurationModelParams, SymptomModelParams};
use crate::tally::{SarPooling, TwoArmTally, VeRatio};

pub type PersonId = usize;

/// Id of the primary case in every simulated unit.
pub const PRIMARY_ID: PersonId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Person {
    pub id: PersonId,
    pub vaccinated: bool,
}

/// Where an infection came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// The unit's primary case itself, infected before the unit forms.
    Seed,
    /// Transmitted by the primary case.
    Primary,
    /// Transmitted by another (non-primary) unit member.
    Contact(PersonId),
    /// Acquired outside the unit.
    Community,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Infection {
    pub person_id: PersonId,
    pub acquisition_time: f64,
    pub source: Source,
    pub symptomatic: bool,
    pub symptom_onset_time: Option<f64>,
    pub duration: f64,
}

impl Infection {
    pub fn end_time(&self) -> f64 {
        self.acquisition_time + self.duration
    }

    /// Whether a perfect test at `t` would come back positive.
    pub fn is_active_at(&self, t: f64) -> bool {
        t >= self.acquisition_time && t < self.end_time()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitTruth {
    pub persons: Vec<Person>,
    pub infections: Vec<Infection>,
}

impl UnitTruth {
    pub fn primary(&self) -> &Infection {
        self.infections
            .iter()
            .find(|i| i.source == Source::Seed)
            .expect("unit has a primary infection")
    }

    pub fn primary_person(&self) -> &Person {
        let id = self.primary().person_id;
        self.person(id).expect("primary is a unit member")
    }

    pub fn person(&self, id: PersonId) -> Option<&Person> {
        self.persons.iter().find(|p| p.id == id)
    }

    pub fn infection_of(&self, id: PersonId) -> Option<&Infection> {
        self.infections.iter().find(|i| i.person_id == id)
    }

    pub fn contacts(&self) -> usize {
        self.persons.len() - 1
    }

    /// Number of contacts infected by the primary case.
    pub fn primary_transmissions(&self) -> usize {
        self.infections.iter().filter(|i| i.source == Source::Primary).count()
    }
}

/// How the per-contact transmission probability depends on the infector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransmissionMode {
    /// `tau * (delta if asymptomatic) * (nu if vaccinated)`, independent of duration.
    #[default]
    PerUnitBernoulli,
    /// `1 - exp(-duration * tau_v)` with the daily hazard of the duration model.
    PerDayHazard,
    /// `min(1, duration * tau_v)`: the small-hazard approximation taken literally.
    LinearHazard,
}

/// Placement of a transmission event inside the infector's infectious window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransmissionTiming {
    #[default]
    Uniform,
    /// First event of a constant-hazard process, conditioned on falling
    /// inside the window.
    ExponentialFirstEvent,
}

/// Incubation period, log-normal with the given mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncubationModel {
    pub mean_days: f64,
    pub log_sd: f64,
}

impl Default for IncubationModel {
    fn default() -> Self {
        Self {
            mean_days: 6.0,
            log_sd: 0.5,
        }
    }
}

impl IncubationModel {
    fn distribution(&self) -> LogNormal<f64> {
        let mu = self.mean_days.ln() - 0.5 * self.log_sd * self.log_sd;
        LogNormal::new(mu, self.log_sd).expect("validated incubation model")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitConfig {
    pub unit_size: usize,
    pub p_primary_vaccinated: f64,
    pub contacts_vaccinated: bool,
    pub symptom: SymptomModelParams,
    pub duration: DurationModelParams,
    pub incubation: IncubationModel,
    /// Per-contact, per-day probability of acquiring infection outside the unit.
    pub community_daily_hazard: f64,
    /// Community exposure runs over `[0, community_horizon_days)`.
    pub community_horizon_days: f64,
    pub contact_to_contact: bool,
    pub transmission_mode: TransmissionMode,
    pub transmission_timing: TransmissionTiming,
}

impl Default for UnitConfig {
    fn default() -> Self {
        Self {
            unit_size: 4,
            p_primary_vaccinated: 0.5,
            contacts_vaccinated: false,
            symptom: SymptomModelParams::default(),
            duration: DurationModelParams::default(),
            incubation: IncubationModel::default(),
            community_daily_hazard: 0.0,
            community_horizon_days: 60.0,
            contact_to_contact: false,
            transmission_mode: TransmissionMode::default(),
            transmission_timing: TransmissionTiming::default(),
        }
    }
}

impl UnitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.unit_size < 2 {
            return Err(invalid("unit_size", format!("{} < 2", self.unit_size)));
        }
        if !(0.0..=1.0).contains(&self.p_primary_vaccinated) {
            return Err(invalid("p_primary_vaccinated", "must be in [0, 1]"));
        }
        if !(self.incubation.mean_days > 0.0 && self.incubation.mean_days.is_finite()) {
            return Err(invalid("incubation_mean_days", "must be finite and > 0"));
        }
        if !(self.incubation.log_sd > 0.0 && self.incubation.log_sd.is_finite()) {
            return Err(invalid("incubation_log_sd", "must be finite and > 0"));
        }
        if !(0.0..1.0).contains(&self.community_daily_hazard) {
            return Err(invalid("community_daily_hazard", "must be in [0, 1)"));
        }
        if !(self.community_horizon_days >= 0.0 && self.community_horizon_days.is_finite()) {
            return Err(invalid("community_horizon_days", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// Same unit with the primary's vaccination status fixed.
    pub fn for_arm(&self, vaccinated: bool) -> UnitConfig {
        UnitConfig {
            p_primary_vaccinated: if vaccinated { 1.0 } else { 0.0 },
            ..self.clone()
        }
    }

    fn transmission_probability(&self, infector: &Infection, vaccinated: bool) -> (f64, f64) {
        let n = infector.duration;
        match self.transmission_mode {
            TransmissionMode::PerUnitBernoulli => {
                let s = &self.symptom;
                let mut p = s.tau();
                if !infector.symptomatic {
                    p *= s.delta();
                }
                if vaccinated {
                    p *= s.nu();
                }
                // equivalent constant hazard over the window, for exponential timing
                let h = if p < 1.0 { -(1.0 - p).ln() / n } else { f64::INFINITY };
                (p, h)
            }
            TransmissionMode::PerDayHazard => {
                let h = self.duration.daily_hazard(vaccinated);
                (1.0 - (-h * n).exp(), h)
            }
            TransmissionMode::LinearHazard => {
                let h = self.duration.daily_hazard(vaccinated);
                ((h * n).min(1.0), h)
            }
        }
    }
}

/// Clinical course of one infection: `(symptomatic, onset offset, duration)`.
fn sample_course<R: Rng + ?Sized>(cfg: &UnitConfig, vaccinated: bool, rng: &mut R) -> (bool, Option<f64>, f64) {
    let s = &cfg.symptom;
    let p_sym = if vaccinated {
        s.lambda_symptom() * s.rho_symptom()
    } else {
        s.rho_symptom()
    };
    let symptomatic = rng.random::<f64>() < p_sym;
    let d = &cfg.duration;
    let mean = d.mean_duration(vaccinated);
    let duration = mean - d.c() + 2.0 * d.c() * rng.random::<f64>();
    let onset = symptomatic.then(|| cfg.incubation.distribution().sample(rng));
    (symptomatic, onset, duration)
}

fn infect<R: Rng + ?Sized>(
    cfg: &UnitConfig,
    person: &Person,
    time: f64,
    source: Source,
    rng: &mut R,
) -> Infection {
    let (symptomatic, onset, duration) = sample_course(cfg, person.vaccinated, rng);
    Infection {
        person_id: person.id,
        acquisition_time: time,
        source,
        symptomatic,
        symptom_onset_time: onset.map(|o| time + o),
        duration,
    }
}

/// Draws the primary case: vaccination status, then its clinical course,
/// with acquisition at time 0.
pub fn sample_primary<R: Rng + ?Sized>(cfg: &UnitConfig, rng: &mut R) -> (Person, Infection) {
    let person = Person {
        id: PRIMARY_ID,
        vaccinated: rng.random::<f64>() < cfg.p_primary_vaccinated,
    };
    let infection = infect(cfg, &person, 0.0, Source::Seed, rng);
    (person, infection)
}

/// Attempts transmission from `infector`; returns the infection time on success.
fn attempt<R: Rng + ?Sized>(cfg: &UnitConfig, infector: &Infection, vaccinated: bool, rng: &mut R) -> Option<f64> {
    let (p, hazard) = cfg.transmission_probability(infector, vaccinated);
    if rng.random::<f64>() >= p {
        return None;
    }
    let n = infector.duration;
    let u: f64 = rng.random();
    let offset = match cfg.transmission_timing {
        TransmissionTiming::Uniform => u * n,
        TransmissionTiming::ExponentialFirstEvent => {
            if hazard.is_infinite() {
                0.0
            } else if hazard * n < 1e-12 {
                u * n
            } else {
                // inverse CDF of Exp(hazard) truncated to [0, n)
                let mass = -(-hazard * n).exp_m1();
                -(-u * mass).ln_1p() / hazard
            }
        }
    };
    Some(infector.acquisition_time + offset.min(n * (1.0 - f64::EPSILON)))
}

struct Candidate {
    time: f64,
    target: PersonId,
    source: Source,
}

fn propose<R: Rng + ?Sized>(
    cfg: &UnitConfig,
    persons: &[Person],
    infected: &[bool],
    infector: &Infection,
    pending: &mut Vec<Candidate>,
    rng: &mut R,
) {
    let vaccinated = persons[infector.person_id].vaccinated;
    let source = if infector.source == Source::Seed {
        Source::Primary
    } else {
        Source::Contact(infector.person_id)
    };
    for target in persons.iter().map(|p| p.id) {
        if infected[target] {
            continue;
        }
        if let Some(time) = attempt(cfg, infector, vaccinated, rng) {
            pending.push(Candidate { time, target, source });
        }
    }
}

/// Simulates one transmission unit.
pub fn simulate_unit<R: Rng + ?Sized>(cfg: &UnitConfig, rng: &mut R) -> UnitTruth {
    debug_assert!(cfg.validate().is_ok());
    let (primary, seed) = sample_primary(cfg, rng);
    let mut persons = Vec::with_capacity(cfg.unit_size);
    persons.push(primary);
    persons.extend((1..cfg.unit_size).map(|id| Person {
        id,
        vaccinated: cfg.contacts_vaccinated,
    }));

    let mut infected = vec![false; cfg.unit_size];
    infected[PRIMARY_ID] = true;
    let mut infections = vec![seed];
    let mut pending = Vec::new();
    propose(cfg, &persons, &infected, &seed, &mut pending, rng);

    if cfg.community_daily_hazard > 0.0 {
        let rate = -(1.0 - cfg.community_daily_hazard).ln();
        let exp = Exp::new(rate).expect("positive community rate");
        for id in 1..cfg.unit_size {
            let t: f64 = exp.sample(rng);
            if t < cfg.community_horizon_days {
                pending.push(Candidate {
                    time: t,
                    target: id,
                    source: Source::Community,
                });
            }
        }
    }

    loop {
        pending.retain(|c| !infected[c.target]);
        let Some(next) = pending
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.time.total_cmp(&b.1.time).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
        else {
            break;
        };
        let c = pending.swap_remove(next);
        infected[c.target] = true;
        let inf = infect(cfg, &persons[c.target], c.time, c.source, rng);
        infections.push(inf);
        if cfg.contact_to_contact {
            propose(cfg, &persons, &infected, &inf, &mut pending, rng);
        }
    }

    UnitTruth { persons, infections }
}

/// Adds a unit to a truth tally: contacts at risk and transmissions from the primary.
pub fn tally_truth(tally: &mut TwoArmTally, unit: &UnitTruth) {
    let vaccinated = unit.primary_person().vaccinated;
    tally
        .arm_mut(vaccinated)
        .add(unit.contacts() as u32, unit.primary_transmissions() as u32);
}

/// VE-SAR computed from who actually infected whom.
pub fn true_ve_sar<'a>(units: impl IntoIterator<Item = &'a UnitTruth>) -> Result<VeRatio> {
    let mut tally = TwoArmTally::default();
    for u in units {
        tally_truth(&mut tally, u);
    }
    tally.ve(SarPooling::Pooled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn unvaccinated_primary_when_probability_zero() {
        let cfg = UnitConfig {
            p_primary_vaccinated: 0.0,
            ..UnitConfig::default()
        };
        let mut r = rng(1);
        for _ in 0..1000 {
            assert!(!sample_primary(&cfg, &mut r).0.vaccinated);
        }
    }

    #[test]
    fn primary_course_respects_duration_support() {
        let cfg = UnitConfig::default();
        let mut r = rng(2);
        for _ in 0..2000 {
            let (p, inf) = sample_primary(&cfg, &mut r);
            let mean = if p.vaccinated { 8.0 } else { 14.0 };
            assert!(inf.duration >= mean - 7.0 && inf.duration <= mean + 7.0);
            assert_eq!(inf.symptomatic, inf.symptom_onset_time.is_some());
            assert_eq!(inf.acquisition_time, 0.0);
        }
    }

    #[test]
    fn no_transmission_without_hazard() {
        // tau cannot be 0, so switch off transmission through nu with a vaccinated primary
        let cfg = UnitConfig {
            p_primary_vaccinated: 1.0,
            symptom: SymptomModelParams::default().with_nu(0.0).unwrap(),
            ..UnitConfig::default()
        };
        let mut r = rng(3);
        for _ in 0..500 {
            let u = simulate_unit(&cfg, &mut r);
            assert_eq!(u.infections.len(), 1);
            assert_eq!(u.infections[0].source, Source::Seed);
        }
    }

    #[test]
    fn transmissions_fall_inside_source_window() {
        let cfg = UnitConfig {
            unit_size: 6,
            contact_to_contact: true,
            community_daily_hazard: 0.01,
            symptom: SymptomModelParams::default().with_tau(0.6).unwrap(),
            transmission_timing: TransmissionTiming::ExponentialFirstEvent,
            ..UnitConfig::default()
        };
        let mut r = rng(4);
        for _ in 0..500 {
            let u = simulate_unit(&cfg, &mut r);
            for inf in &u.infections {
                let src = match inf.source {
                    Source::Primary => u.primary(),
                    Source::Contact(id) => u.infection_of(id).unwrap(),
                    _ => continue,
                };
                assert!(inf.acquisition_time >= src.acquisition_time);
                assert!(inf.acquisition_time < src.end_time());
            }
        }
    }

    #[test]
    fn exponential_timing_skews_early() {
        let cfg = UnitConfig {
            unit_size: 2,
            p_primary_vaccinated: 0.0,
            transmission_mode: TransmissionMode::PerDayHazard,
            duration: DurationModelParams::default().with_tau0(0.2).unwrap(),
            transmission_timing: TransmissionTiming::ExponentialFirstEvent,
            ..UnitConfig::default()
        };
        let mut r = rng(5);
        let mut rel = Vec::new();
        for _ in 0..20_000 {
            let u = simulate_unit(&cfg, &mut r);
            if let Some(c) = u.infection_of(1) {
                rel.push(c.acquisition_time / u.primary().duration);
            }
        }
        let mean = rel.iter().sum::<f64>() / rel.len() as f64;
        assert!(mean < 0.45, "mean relative time {mean}");
    }

    #[test]
    fn true_ve_requires_both_arms() {
        let cfg = UnitConfig {
            p_primary_vaccinated: 0.0,
            ..UnitConfig::default()
        };
        let mut r = rng(6);
        let units: Vec<_> = (0..50).map(|_| simulate_unit(&cfg, &mut r)).collect();
        assert!(true_ve_sar(&units).is_err());
    }
}
