//! Configuration-driven runs tying the modules together, with CSV tables and
//! a JSON record per run.

mod config;
mod record;
mod runs;
mod selftest;

pub use config::{
    DynamicsConfig, ExperimentConfig, GridConfig, GridRange, InitialState, LdpConfig, ModeCoefficient,
    ObservableSpec, OracleConfig, OutputConfig, Spacing, GRID_CAP,
};
pub use record::{Cell, ExperimentRecord, OutputFile, Recorder, RunStatus};
pub use runs::{
    run_compare, run_compare_in, run_fluctuation, run_fluctuation_in, run_hartree, run_hartree_in, run_oracle,
    run_oracle_in, ComparisonSummary, CHEBYSHEV_SLACK, ORTHOGONALITY_TOL,
};
pub use selftest::{self_test, CheckOutcome, Corruption, SelfTestOptions, SelfTestReport};
