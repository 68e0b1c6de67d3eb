//! Replaying a retrospective analysis on observed units.
//!
//! All day arithmetic is on calendar days (`floor` of the record time), the
//! resolution registries store. A contact counts as a transmission event when
//! the day of its first positive result, minus the day of the index anchor,
//! lies in the inclusive attribution window.

use crate::error::Result;
use crate::observe::{ObservedUnit, TestRecord};
use crate::simcore::PersonId;
use crate::tally::{SarPooling, TwoArmTally};

/// Inclusive window of day offsets after the index anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttributionWindow {
    pub lo: i64,
    pub hi: i64,
}

impl AttributionWindow {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(crate::error::invalid(
                "attribution_window",
                format!("lo = {lo} exceeds hi = {hi}"),
            ));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, offset: i64) -> bool {
        (self.lo..=self.hi).contains(&offset)
    }
}

/// The event time that windows are measured between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowAnchor {
    /// Date of the first positive test.
    #[default]
    TestTime,
    /// Reported symptom onset, falling back to the test date when none was reported.
    OnsetTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndexRule {
    /// Earliest positive test; ties go to the smallest person id.
    #[default]
    FirstPositive,
    /// The enrolled primary case, if it ever tests positive.
    EnrolledPrimary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StudyDesignFilter {
    pub attribution_window: AttributionWindow,
    /// Drop units where another member first tests positive within this many
    /// days of the index (0 = same day).
    pub coprimary_exclusion_days: Option<u32>,
    /// Contact-tracing style: untested contacts leave the denominator.
    /// Otherwise (registry style) they count as negative.
    pub require_contact_tested: bool,
    pub anchor: WindowAnchor,
    pub index_rule: IndexRule,
}

impl StudyDesignFilter {
    /// Household registry linkage; contact infections 2-14 days after the
    /// index, households with more than one positive within two days excluded.
    pub fn harris() -> Self {
        Self {
            attribution_window: AttributionWindow { lo: 2, hi: 14 },
            coprimary_exclusion_days: Some(2),
            require_contact_tested: false,
            anchor: WindowAnchor::OnsetTime,
            index_rule: IndexRule::FirstPositive,
        }
    }

    /// Contact tracing; only tested contacts, tested 1-10 days after the index.
    pub fn eyre() -> Self {
        Self {
            attribution_window: AttributionWindow { lo: 1, hi: 10 },
            coprimary_exclusion_days: None,
            require_contact_tested: true,
            anchor: WindowAnchor::TestTime,
            index_rule: IndexRule::FirstPositive,
        }
    }

    /// Contact tracing; contacts tested 1-14 days after the index.
    pub fn gier() -> Self {
        Self {
            attribution_window: AttributionWindow { lo: 1, hi: 14 },
            coprimary_exclusion_days: None,
            require_contact_tested: true,
            anchor: WindowAnchor::OnsetTime,
            index_rule: IndexRule::FirstPositive,
        }
    }

    /// Household registry linkage; contact infections 1-7 days after the
    /// index, households with more than one positive on the same day excluded.
    pub fn lyngse() -> Self {
        Self {
            attribution_window: AttributionWindow { lo: 1, hi: 7 },
            coprimary_exclusion_days: Some(0),
            require_contact_tested: false,
            anchor: WindowAnchor::TestTime,
            index_rule: IndexRule::FirstPositive,
        }
    }

    /// Every positive contact within `horizon_days` either side of the index
    /// is attributed; no exclusions.
    pub fn maximal(horizon_days: f64) -> Self {
        let h = horizon_days.ceil() as i64;
        Self {
            attribution_window: AttributionWindow { lo: -h, hi: h },
            coprimary_exclusion_days: None,
            require_contact_tested: false,
            anchor: WindowAnchor::TestTime,
            index_rule: IndexRule::FirstPositive,
        }
    }

    pub fn with_index_rule(self, index_rule: IndexRule) -> Self {
        Self { index_rule, ..self }
    }

    pub fn with_anchor(self, anchor: WindowAnchor) -> Self {
        Self { anchor, ..self }
    }

    pub fn with_window(self, attribution_window: AttributionWindow) -> Self {
        Self {
            attribution_window,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExclusionReason {
    NoIndex,
    CoPrimary,
    NoContactsAtRisk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitAnalysis {
    pub index_id: Option<PersonId>,
    pub index_vaccinated: bool,
    pub n_at_risk_contacts: u32,
    pub n_attributed_transmissions: u32,
    pub excluded: Option<ExclusionReason>,
}

impl UnitAnalysis {
    fn excluded(index_id: Option<PersonId>, index_vaccinated: bool, reason: ExclusionReason) -> Self {
        Self {
            index_id,
            index_vaccinated,
            n_at_risk_contacts: 0,
            n_attributed_transmissions: 0,
            excluded: Some(reason),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExclusionCounts {
    pub no_index: u64,
    pub coprimary: u64,
    pub no_contacts_at_risk: u64,
}

impl ExclusionCounts {
    pub fn record(&mut self, reason: ExclusionReason) {
        match reason {
            ExclusionReason::NoIndex => self.no_index += 1,
            ExclusionReason::CoPrimary => self.coprimary += 1,
            ExclusionReason::NoContactsAtRisk => self.no_contacts_at_risk += 1,
        }
    }

    pub fn merge(&mut self, other: &ExclusionCounts) {
        self.no_index += other.no_index;
        self.coprimary += other.coprimary;
        self.no_contacts_at_risk += other.no_contacts_at_risk;
    }

    pub fn total(&self) -> u64 {
        self.no_index + self.coprimary + self.no_contacts_at_risk
    }
}

fn day(t: f64) -> i64 {
    t.floor() as i64
}

fn anchor_time(rec: &TestRecord, anchor: WindowAnchor) -> f64 {
    match anchor {
        WindowAnchor::TestTime => rec.test_time,
        WindowAnchor::OnsetTime => rec.reported_onset.unwrap_or(rec.test_time),
    }
}

/// Person with the earliest positive test; ties go to the smallest id.
pub fn identify_index(obs: &ObservedUnit) -> Option<PersonId> {
    obs.positives()
        .min_by(|a, b| a.test_time.total_cmp(&b.test_time).then(a.person_id.cmp(&b.person_id)))
        .map(|t| t.person_id)
}

fn index_under(obs: &ObservedUnit, rule: IndexRule) -> Option<PersonId> {
    match rule {
        IndexRule::FirstPositive => identify_index(obs),
        IndexRule::EnrolledPrimary => obs
            .first_positive(obs.enrolled_primary)
            .map(|_| obs.enrolled_primary),
    }
}

/// Classifies one unit under a study design.
pub fn analyze_unit(obs: &ObservedUnit, filter: &StudyDesignFilter) -> UnitAnalysis {
    let Some(index) = index_under(obs, filter.index_rule) else {
        return UnitAnalysis::excluded(None, false, ExclusionReason::NoIndex);
    };
    let index_vaccinated = obs.person(index).is_some_and(|p| p.vaccinated);
    let index_rec = obs.first_positive(index).expect("index has a positive test");
    let index_test_day = day(index_rec.test_time);

    if let Some(d) = filter.coprimary_exclusion_days {
        let clash = obs
            .persons
            .iter()
            .filter(|p| p.id != index)
            .filter_map(|p| obs.first_positive(p.id))
            .any(|r| (day(r.test_time) - index_test_day).abs() <= d as i64);
        if clash {
            return UnitAnalysis::excluded(Some(index), index_vaccinated, ExclusionReason::CoPrimary);
        }
    }

    let anchor_day = day(anchor_time(index_rec, filter.anchor));
    let mut at_risk = 0u32;
    let mut attributed = 0u32;
    for p in obs.persons.iter().filter(|p| p.id != index) {
        if filter.require_contact_tested && !obs.was_tested(p.id) {
            continue;
        }
        at_risk += 1;
        if let Some(r) = obs.first_positive(p.id) {
            let offset = day(anchor_time(r, filter.anchor)) - anchor_day;
            if filter.attribution_window.contains(offset) {
                attributed += 1;
            }
        }
    }
    if at_risk == 0 {
        return UnitAnalysis::excluded(Some(index), index_vaccinated, ExclusionReason::NoContactsAtRisk);
    }
    UnitAnalysis {
        index_id: Some(index),
        index_vaccinated,
        n_at_risk_contacts: at_risk,
        n_attributed_transmissions: attributed,
        excluded: None,
    }
}

/// Adds an analysed unit to the running tallies.
pub fn tally_analysis(tally: &mut TwoArmTally, exclusions: &mut ExclusionCounts, a: &UnitAnalysis) {
    match a.excluded {
        Some(reason) => exclusions.record(reason),
        None => tally
            .arm_mut(a.index_vaccinated)
            .add(a.n_at_risk_contacts, a.n_attributed_transmissions),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VeEstimate {
    pub sar_vaccinated: f64,
    pub sar_unvaccinated: f64,
    pub ve: f64,
    pub tally: TwoArmTally,
    pub exclusions: ExclusionCounts,
}

/// Pooled VE-SAR over analysed units.
pub fn estimate_ve_sar(analyses: &[UnitAnalysis]) -> Result<VeEstimate> {
    estimate_ve_sar_with(analyses, SarPooling::Pooled)
}

pub fn estimate_ve_sar_with(analyses: &[UnitAnalysis], pooling: SarPooling) -> Result<VeEstimate> {
    let mut tally = TwoArmTally::default();
    let mut exclusions = ExclusionCounts::default();
    for a in analyses {
        tally_analysis(&mut tally, &mut exclusions, a);
    }
    let r = tally.ve(pooling)?;
    Ok(VeEstimate {
        sar_vaccinated: r.sar_vaccinated,
        sar_unvaccinated: r.sar_unvaccinated,
        ve: r.ve,
        tally,
        exclusions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::observe::TestResult;
    use crate::simcore::Person;

    fn pos(id: PersonId, t: f64) -> TestRecord {
        TestRecord {
            person_id: id,
            test_time: t,
            result: TestResult::Positive,
            reported_onset: None,
        }
    }

    fn neg(id: PersonId, t: f64) -> TestRecord {
        TestRecord {
            result: TestResult::Negative,
            ..pos(id, t)
        }
    }

    fn obs(size: usize, vaccinated_primary: bool, mut tests: Vec<TestRecord>) -> ObservedUnit {
        tests.sort_by(|a, b| a.test_time.total_cmp(&b.test_time).then(a.person_id.cmp(&b.person_id)));
        ObservedUnit {
            persons: (0..size)
                .map(|id| Person {
                    id,
                    vaccinated: id == 0 && vaccinated_primary,
                })
                .collect(),
            tests,
            enrolled_primary: 0,
        }
    }

    fn analysis(vacc: bool, m: u32, a: u32) -> UnitAnalysis {
        UnitAnalysis {
            index_id: Some(0),
            index_vaccinated: vacc,
            n_at_risk_contacts: m,
            n_attributed_transmissions: a,
            excluded: None,
        }
    }

    #[test]
    fn index_identification() {
        assert_eq!(identify_index(&obs(3, false, vec![neg(0, 1.0)])), None);
        assert_eq!(identify_index(&obs(3, false, vec![pos(2, 4.0), neg(0, 1.0)])), Some(2));
        assert_eq!(identify_index(&obs(3, false, vec![pos(2, 4.0), pos(1, 4.0)])), Some(1));
    }

    #[test]
    fn late_contact_not_attributed() {
        let o = obs(2, false, vec![pos(0, 0.5), pos(1, 20.5)]);
        let a = analyze_unit(&o, &StudyDesignFilter::harris());
        assert_eq!(a.excluded, None);
        assert_eq!(a.n_at_risk_contacts, 1);
        assert_eq!(a.n_attributed_transmissions, 0);
    }

    #[test]
    fn same_day_positives_excluded_by_lyngse() {
        let o = obs(3, false, vec![pos(0, 3.1), pos(2, 3.9)]);
        let a = analyze_unit(&o, &StudyDesignFilter::lyngse());
        assert_eq!(a.excluded, Some(ExclusionReason::CoPrimary));
        // next day is not a co-primary under a same-day rule
        let o = obs(3, false, vec![pos(0, 3.1), pos(2, 4.0)]);
        let a = analyze_unit(&o, &StudyDesignFilter::lyngse());
        assert_eq!(a.excluded, None);
        assert_eq!(a.n_attributed_transmissions, 1);
    }

    #[test]
    fn untested_contacts_and_denominators() {
        let o = obs(4, false, vec![pos(0, 1.0), neg(1, 3.0)]);
        let registry = StudyDesignFilter::harris();
        assert_eq!(analyze_unit(&o, &registry).n_at_risk_contacts, 3);
        let tracing = StudyDesignFilter::eyre();
        assert_eq!(analyze_unit(&o, &tracing).n_at_risk_contacts, 1);
        let o = obs(4, false, vec![pos(0, 1.0)]);
        assert_eq!(
            analyze_unit(&o, &tracing).excluded,
            Some(ExclusionReason::NoContactsAtRisk)
        );
    }

    #[test]
    fn onset_anchor_uses_reported_onset() {
        let mut idx = pos(0, 8.0);
        idx.reported_onset = Some(6.0);
        let mut c = pos(1, 9.0);
        c.reported_onset = Some(7.5);
        let o = obs(2, false, vec![idx, c]);
        let w = AttributionWindow::new(1, 1).unwrap();
        let f = StudyDesignFilter::maximal(60.0).with_window(w);
        // test days 8 -> 9: offset 1
        assert_eq!(analyze_unit(&o, &f).n_attributed_transmissions, 1);
        // onset days 6 -> 7: offset 1
        let f = f.with_anchor(WindowAnchor::OnsetTime);
        assert_eq!(analyze_unit(&o, &f).n_attributed_transmissions, 1);
        let w0 = AttributionWindow::new(2, 2).unwrap();
        assert_eq!(analyze_unit(&o, &f.with_window(w0)).n_attributed_transmissions, 0);
    }

    #[test]
    fn enrolled_primary_rule() {
        let o = obs(3, true, vec![pos(1, 2.0), pos(0, 5.0)]);
        let f = StudyDesignFilter::maximal(60.0);
        let a = analyze_unit(&o, &f);
        assert_eq!(a.index_id, Some(1));
        assert!(!a.index_vaccinated);
        let a = analyze_unit(&o, &f.with_index_rule(IndexRule::EnrolledPrimary));
        assert_eq!(a.index_id, Some(0));
        assert!(a.index_vaccinated);
        assert_eq!(a.n_attributed_transmissions, 1);
        let o = obs(3, true, vec![pos(1, 2.0)]);
        let a = analyze_unit(&o, &f.with_index_rule(IndexRule::EnrolledPrimary));
        assert_eq!(a.excluded, Some(ExclusionReason::NoIndex));
    }

    #[test]
    fn estimate_examples() {
        let xs = [analysis(true, 20, 3), analysis(false, 10, 3)];
        let e = estimate_ve_sar(&xs).unwrap();
        assert!((e.ve - 0.5).abs() < 1e-12);
        let xs = [analysis(true, 10, 3), analysis(false, 10, 3)];
        assert!(estimate_ve_sar(&xs).unwrap().ve.abs() < 1e-15);
        let xs = [analysis(true, 10, 3), analysis(false, 10, 0)];
        assert_eq!(estimate_ve_sar(&xs), Err(Error::UndefinedVe));
        let xs = [analysis(false, 10, 3)];
        assert!(matches!(estimate_ve_sar(&xs), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn per_unit_mean_pooling() {
        let xs = [analysis(true, 1, 1), analysis(true, 3, 0), analysis(false, 2, 1)];
        let e = estimate_ve_sar_with(&xs, SarPooling::PerUnitMean).unwrap();
        assert!((e.sar_vaccinated - 0.5).abs() < 1e-15);
        assert!((e.ve - 0.0).abs() < 1e-15);
        let e = estimate_ve_sar(&xs).unwrap();
        assert!((e.sar_vaccinated - 0.25).abs() < 1e-15);
    }

    #[test]
    fn window_validation() {
        assert!(AttributionWindow::new(3, 2).is_err());
        assert!(AttributionWindow::new(2, 2).is_ok());
    }
}
