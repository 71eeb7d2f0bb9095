//! Experiment presets, sweeps and CSV output.

pub mod config;
pub mod expr;
pub mod limit;
pub mod output;
pub mod presets;
pub mod run;
pub mod sweep;

pub use config::{ExperimentConfig, SolverKind};
pub use limit::{limit_compare, write_limit, LimitRow};
pub use presets::{preset, PRESET_NAMES};
pub use run::{execute, run_preset, write_artifacts, FinalState, RunOutcome};
pub use sweep::{converge, write_sweep, OrderFit, ReferenceCache, ReferencePolicy, SweepResult, SweepRow, Vary};
