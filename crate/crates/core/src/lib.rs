//! Bias in vaccine efficacy against the secondary attack rate (VE-SAR)
//! under imperfect testing.
//!
//! The crate has two halves that check each other:
//!
//! * [`estimands`] evaluates the closed-form target and actual estimands for
//!   symptom-prompted and infrequent (scheduled) testing.
//! * [`simcore`], [`observe`] and [`infer`] form a ground-truth pipeline:
//!   simulate transmission units, degrade them into the test records a
//!   retrospective database would hold, then replay a naive study analysis.
//!
//! [`harness`] ties both together: seeded, thread-count independent Monte
//! Carlo replication, figure sweeps and CSV output.
//!
//! ```
//! use vesar::estimands::{symptom_prompted_target_mu, SymptomModelParams};
//!
//! let p = SymptomModelParams::new(0.2, 0.5, 0.6, 0.5, 0.3).unwrap();
//! let mu = symptom_prompted_target_mu(&p).unwrap();
//! assert!((mu - 0.44).abs() < 1e-12);
//! ```

pub mod error;
pub mod estimands;
pub mod harness;
pub mod infer;
pub mod observe;
pub mod simcore;
pub mod tally;

pub use error::{Error, Result};
