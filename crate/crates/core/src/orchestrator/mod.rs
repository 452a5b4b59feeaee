//! Spec loading and the one-shot, batch and watch pipelines.

mod pipeline;
mod spec;
mod watch;

pub use pipeline::{default_jobs, BatchSummary, Grader, Layout, PipelineError};
pub use spec::{load_assignment_spec, AssignmentSpec, SpecError};
pub use watch::{WatchConfig, WatchSummary, DEFAULT_POLL_INTERVAL, MIN_POLL_INTERVAL};
