//! Job configuration, sequence files, traces and job orchestration.

mod files;
mod job;
mod run;

pub use files::{
    read_sequence, read_train_trace, write_json, write_train_trace, write_wigner_csv, BlockEntry, NativeEntry,
    SequenceFile, SequenceMeta,
};
pub use job::{JobSpec, MatrixEntries, PreparedState, Seeds, TargetSpec, WignerSpec};
pub use run::{
    evaluate_file, finetune_job, init_job, report_json, run_job, run_sweep, sweep_workers, wigner_snapshots,
    JobOutcome, RunSummary, SweepRow, SweepSpec,
};

use std::path::Path;

use serde_json::json;

use crate::error::Error;

/// Failure of a job, classified for the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum JobError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{field}: {message}")]
    Field { field: String, message: String },

    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error(transparent)]
    Core(#[from] Error),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("fidelity {fidelity} is already saturated before finetuning")]
    Saturated { fidelity: f64 },
}

impl JobError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Field { field: field.into(), message: message.into() }
    }

    pub fn parse(path: &Path, e: serde_json::Error) -> Self {
        Self::Parse { path: path.display().to_string(), line: e.line(), column: e.column(), message: e.to_string() }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::Io { path: path.display().to_string(), message: e.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            JobError::Config(_) => "config",
            JobError::Field { .. } => "field",
            JobError::Parse { .. } => "parse",
            JobError::Io { .. } => "io",
            JobError::Core(Error::NonFinite(_)) | JobError::Numeric(_) => "numeric",
            JobError::Core(_) => "invalid_input",
            JobError::Saturated { .. } => "saturated",
        }
    }

    /// 2 for configuration and input problems, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "numeric" | "saturated" => 3,
            _ => 2,
        }
    }

    /// Machine-readable description.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() });
        match self {
            JobError::Field { field, .. } => v["field"] = json!(field),
            JobError::Parse { path, line, column, .. } => {
                v["path"] = json!(path);
                v["line"] = json!(line);
                v["column"] = json!(column);
            }
            JobError::Io { path, .. } => v["path"] = json!(path),
            JobError::Saturated { fidelity } => v["fidelity"] = json!(fidelity),
            _ => {}
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(JobError::Config("x".into()).exit_code(), 2);
        assert_eq!(JobError::field("dim", "bad").exit_code(), 2);
        assert_eq!(JobError::Numeric("nan".into()).exit_code(), 3);
        assert_eq!(JobError::Core(Error::NonFinite("x")).exit_code(), 3);
        assert_eq!(JobError::Core(Error::DimTooSmall(1)).exit_code(), 2);
        assert_eq!(JobError::Saturated { fidelity: 1.0 }.exit_code(), 3);
        let j = JobError::field("blocks[1].theta", "wrong length").to_json();
        assert_eq!(j["field"], "blocks[1].theta");
        assert_eq!(j["error"], "field");
    }
}
