//! Scenario configuration, seeded replication, sweeps and CSV output.

pub mod config;
pub mod csv;
pub mod oracle;
pub mod sweep;
pub mod validate;

pub use config::{KvConfig, ScenarioConfig, SweepAxis};
pub use csv::{format_g12, to_csv_string, write_csv, ResultRow, CSV_COLUMNS};
pub use oracle::{mc_oracle, mc_oracle_with, run_pipeline, McEstimate, McOptions, Pipeline, PipelineTally, SeMethod};
pub use sweep::{
    run_scenario, sweep_figure_1a, sweep_figure_1b, sweep_figure_a1, SweepMc,
};
