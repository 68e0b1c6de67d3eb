//! A unit where the first person to test positive is not the primary case.
//!
//! ```text
//! cargo run --example misclassified_index
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vesar::infer::{analyze_unit, identify_index, StudyDesignFilter};
use vesar::observe::{apply_policy, TestingPolicy};
use vesar::simcore::{Infection, Person, Source, UnitTruth};

fn infection(id: usize, t: f64, source: Source, onset: Option<f64>, duration: f64) -> Infection {
    Infection {
        person_id: id,
        acquisition_time: t,
        source,
        symptomatic: onset.is_some(),
        symptom_onset_time: onset,
        duration,
    }
}

fn main() {
    // the primary has a long pre-symptomatic period; its first secondary case does not
    let truth = UnitTruth {
        persons: (0..4).map(|id| Person { id, vaccinated: false }).collect(),
        infections: vec![
            infection(0, 0.0, Source::Seed, Some(6.0), 10.0),
            infection(1, 2.0, Source::Primary, Some(5.0), 10.0),
            infection(2, 3.0, Source::Primary, None, 9.0),
        ],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let obs = apply_policy(&truth, &TestingPolicy::symptom_prompted(0.0), &mut rng);
    for t in &obs.tests {
        println!("person {} tested day {:.1}: {:?}", t.person_id, t.test_time, t.result);
    }
    println!("true primary: {}", truth.primary().person_id);
    println!("inferred index: {:?}", identify_index(&obs));
    let a = analyze_unit(&obs, &StudyDesignFilter::maximal(60.0));
    println!(
        "true transmissions {}, attributed {} of {} contacts at risk",
        truth.primary_transmissions(),
        a.n_attributed_transmissions,
        a.n_at_risk_contacts
    );
}
