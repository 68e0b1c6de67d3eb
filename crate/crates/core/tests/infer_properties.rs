use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vesar::harness::{run_pipeline, McOptions, Pipeline};
use vesar::infer::{analyze_unit, estimate_ve_sar, AttributionWindow, StudyDesignFilter, WindowAnchor};
use vesar::observe::{apply_policy, ObservedUnit, TestRecord, TestResult, TestingPolicy};
use vesar::simcore::{simulate_unit, Person, UnitConfig};
use vesar::tally::SarPooling;

fn observed_unit() -> impl Strategy<Value = ObservedUnit> {
    let record = (0usize..5, 0.0..40.0f64, any::<bool>(), proptest::option::of(0.0..40.0f64)).prop_map(
        |(id, t, pos, onset)| TestRecord {
            person_id: id,
            test_time: t,
            result: if pos { TestResult::Positive } else { TestResult::Negative },
            reported_onset: onset,
        },
    );
    proptest::collection::vec(record, 0..20).prop_map(|mut tests| {
        tests.sort_by(|a, b| a.test_time.total_cmp(&b.test_time).then(a.person_id.cmp(&b.person_id)));
        ObservedUnit {
            persons: (0..5).map(|id| Person { id, vaccinated: id % 2 == 0 }).collect(),
            tests,
            enrolled_primary: 0,
        }
    })
}

fn filter() -> impl Strategy<Value = StudyDesignFilter> {
    prop_oneof![
        Just(StudyDesignFilter::harris()),
        Just(StudyDesignFilter::eyre()),
        Just(StudyDesignFilter::gier()),
        Just(StudyDesignFilter::lyngse()),
        Just(StudyDesignFilter::maximal(60.0)),
    ]
}

proptest! {
    #[test]
    fn widening_the_window_never_loses_events(
        obs in observed_unit(),
        f in filter(),
        lo in -20i64..20,
        width in 0i64..20,
        grow_lo in 0i64..10,
        grow_hi in 0i64..10,
    ) {
        let narrow = f.with_window(AttributionWindow::new(lo, lo + width).unwrap());
        let wide = f.with_window(AttributionWindow::new(lo - grow_lo, lo + width + grow_hi).unwrap());
        let a = analyze_unit(&obs, &narrow);
        let b = analyze_unit(&obs, &wide);
        prop_assert_eq!(a.excluded, b.excluded);
        prop_assert!(b.n_attributed_transmissions >= a.n_attributed_transmissions);
        prop_assert!(a.n_attributed_transmissions <= a.n_at_risk_contacts);
        prop_assert!(b.n_attributed_transmissions <= b.n_at_risk_contacts);
    }

    #[test]
    fn anchors_share_the_index(obs in observed_unit(), f in filter()) {
        let a = analyze_unit(&obs, &f.with_anchor(WindowAnchor::TestTime));
        let b = analyze_unit(&obs, &f.with_anchor(WindowAnchor::OnsetTime));
        prop_assert_eq!(a.index_id, b.index_id);
        prop_assert_eq!(a.n_at_risk_contacts, b.n_at_risk_contacts);
    }
}

fn rec(id: usize, t: f64, positive: bool) -> TestRecord {
    TestRecord {
        person_id: id,
        test_time: t,
        result: if positive { TestResult::Positive } else { TestResult::Negative },
        reported_onset: positive.then_some(t - 0.5),
    }
}

#[test]
fn planted_late_community_infection_is_never_attributed() {
    let filters = [
        StudyDesignFilter::harris(),
        StudyDesignFilter::eyre(),
        StudyDesignFilter::gier(),
        StudyDesignFilter::lyngse(),
    ];
    for late in [15.5, 20.5, 30.5, 55.5] {
        let obs = ObservedUnit {
            persons: (0..4).map(|id| Person { id, vaccinated: false }).collect(),
            tests: vec![rec(0, 0.7, true), rec(2, 3.0, false), rec(3, 3.0, false), rec(1, late, true)],
            enrolled_primary: 0,
        };
        for f in &filters {
            let a = analyze_unit(&obs, f);
            assert_eq!(a.excluded, None);
            assert_eq!(a.n_attributed_transmissions, 0, "{f:?} at {late}");
        }
    }
}

#[test]
fn untested_contacts_follow_the_denominator_convention() {
    let obs = ObservedUnit {
        persons: (0..4).map(|id| Person { id, vaccinated: true }).collect(),
        tests: vec![rec(0, 1.2, true), rec(1, 4.5, true)],
        enrolled_primary: 0,
    };
    let registry = analyze_unit(&obs, &StudyDesignFilter::lyngse());
    let tracing = analyze_unit(&obs, &StudyDesignFilter::eyre());
    assert_eq!((registry.n_at_risk_contacts, registry.n_attributed_transmissions), (3, 1));
    assert_eq!((tracing.n_at_risk_contacts, tracing.n_attributed_transmissions), (1, 1));
}

#[test]
fn parallel_and_serial_estimates_agree() {
    use rayon::prelude::*;
    let cfg = UnitConfig {
        community_daily_hazard: 0.005,
        contact_to_contact: true,
        ..UnitConfig::default()
    };
    let policy = TestingPolicy::scheduled(3.0);
    let units: Vec<ObservedUnit> = (0..20_000u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(i);
            let truth = simulate_unit(&cfg, &mut rng);
            apply_policy(&truth, &policy, &mut rng)
        })
        .collect();
    let f = StudyDesignFilter::harris();
    let serial: Vec<_> = units.iter().map(|u| analyze_unit(u, &f)).collect();
    let parallel: Vec<_> = units.par_iter().map(|u| analyze_unit(u, &f)).collect();
    assert_eq!(serial, parallel);
    let e = estimate_ve_sar(&serial).unwrap();
    assert_eq!(e.exclusions.total() + e.tally.vaccinated.units() + e.tally.unvaccinated.units(), 20_000);
}

#[test]
fn community_infections_raise_both_attack_rates() {
    let base = UnitConfig::default();
    let closed = Pipeline::fully_observed(base.clone());
    let open = Pipeline::fully_observed(UnitConfig {
        community_daily_hazard: 0.003,
        ..base
    });
    let opts = McOptions::new(17);
    let n = 100_000;
    let a = run_pipeline(&closed, n, &opts).unwrap().observed;
    let b = run_pipeline(&open, n, &opts).unwrap().observed;
    for (x, y) in [(&a.vaccinated, &b.vaccinated), (&a.unvaccinated, &b.unvaccinated)] {
        let (px, py) = (x.pooled_rate().unwrap(), y.pooled_rate().unwrap());
        let se = (x.pooled_rate_variance().unwrap() + y.pooled_rate_variance().unwrap()).sqrt();
        assert!(py - px > 3.0 * se, "{px} -> {py} (se {se})");
    }
    assert!(a.ve(SarPooling::Pooled).is_ok() && b.ve(SarPooling::Pooled).is_ok());
}
