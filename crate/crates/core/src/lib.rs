//! Hybrid automatic grader for entry-level programming assignments.
//!
//! A submission is a ZIP archive named `FirstName_LastName_N.zip`. Grading
//! unpacks it into a workspace, compiles it with an external compiler, checks
//! regex-based structural rules against the source (for example "the
//! solution must use nested `if`/`else`") and runs the executable against a
//! black-box test set. Both verdicts are fused into a weighted score and
//! written out as a text report, a JSON record and lines in an append-only
//! grading log.
//!
//! | module | role |
//! |---|---|
//! | [`ingest`] | inbox polling, archive names, guarded extraction, quarantine |
//! | [`build`] | compiler invocation and diagnostic capture |
//! | [`lexcheck`] | comment/string stripping and regex rule evaluation |
//! | [`blackbox`] | running tests with timeouts and output caps |
//! | [`assess`] | scoring, report rendering, grading log |
//! | [`orchestrator`] | spec files, `grade`/`batch`/`watch` pipelines |
//!
//! The `examples/` directory has one runnable program per capability.

pub mod assess;
pub mod blackbox;
pub mod build;
pub mod ingest;
pub mod lexcheck;
pub mod orchestrator;
mod process;

pub use assess::{AssessmentReport, GradingLog, ReportStatus, Rubric};
pub use orchestrator::{load_assignment_spec, AssignmentSpec, BatchSummary, Grader, Layout, WatchConfig};
