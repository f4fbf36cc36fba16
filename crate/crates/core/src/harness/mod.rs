//! Experiment configuration, presets, end-to-end runs and their on-disk
//! bundles.

pub mod compare;
pub mod config;
pub mod io;
pub mod preset;
pub mod run;

pub use compare::{compare, compare_scoped, DiffReport, Scope, Tolerances};
pub use config::ExperimentConfig;
pub use io::write_bundle;
pub use preset::{preset, PRESETS};
pub use run::{run, run_with_threads, Bundle, Verdict};
