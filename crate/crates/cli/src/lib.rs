//! Batch front end: JSON problem specs in, result bundles and CSV diagnostics out.

pub mod pipeline;
pub mod spec;

pub use pipeline::{run_complete, run_verify, PipelineError, ResultBundle};
pub use spec::{ProblemSpec, SpaceSpec};
