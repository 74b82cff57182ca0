//! Manufactured-solution registry, error norms, convergence studies and
//! CSV output used by the command-line driver and the acceptance suite.

pub mod cases;
pub mod config;
pub mod jet;
pub mod norms;
pub mod study;

pub use cases::{builtin_cases, case_by_name, ExactSolution, TestCase};
pub use norms::{error_norms, ErrorRecord};
pub use study::{convergence_study, run_level, write_csv, ConvergenceReport, LevelResult, CSV_HEADER};
