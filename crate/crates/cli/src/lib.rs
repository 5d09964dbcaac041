//! Command-line plumbing: run configuration, the verification suite and report output.
//!
//! Every suite check carries exactly one citation string:
//!
//! ```
//! let reg = lmoment_cli::suite::registry();
//! let mut names: Vec<_> = reg.iter().map(|d| d.name.clone()).collect();
//! names.sort();
//! names.dedup();
//! assert_eq!(names.len(), reg.len());
//! assert!(reg.iter().all(|d| !d.citation.trim().is_empty()));
//! ```

pub mod config;
pub mod report;
pub mod suite;

pub use config::RunConfig;
pub use report::{canonical_json, emit_report, CheckResult, Format, Status, SuiteResult};
pub use suite::{run_suite, Profile};
