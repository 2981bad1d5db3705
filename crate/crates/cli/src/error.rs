use std::io;

use serde::Serialize;

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Numerical(#[from] fkpp_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("standing hypotheses violated: {0}")]
    Hypotheses(String),
    #[error("{failed} of {total} sweep runs failed")]
    SweepIncomplete { failed: usize, total: usize },
}

/// Machine-readable form of a [`RunError`], written to `error.json` and stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub status: &'static str,
    pub kind: &'static str,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) | RunError::Io(_) => 1,
            RunError::Hypotheses(_) => 3,
            RunError::SweepIncomplete { .. } => 4,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let (kind, code, line, key) = match self {
            RunError::Config(ConfigError::Parse { line, key, .. }) => ("config", "parse", *line, key.clone()),
            RunError::Config(ConfigError::Validation { key, .. }) => ("config", "validation", None, Some(key.clone())),
            RunError::Numerical(e) => ("numerical", core_code(e), None, None),
            RunError::Io(_) => ("io", "io", None, None),
            RunError::Hypotheses(_) => ("hypotheses", "hypotheses", None, None),
            RunError::SweepIncomplete { .. } => ("sweep", "incomplete", None, None),
        };
        ErrorRecord { status: "error", kind, code, message: self.to_string(), line, key }
    }
}

fn core_code(e: &fkpp_core::Error) -> &'static str {
    use fkpp_core::Error::*;
    match e {
        InvalidInput(_) => "invalid_input",
        PeriodMismatch(..) => "period_mismatch",
        NoPositivePeriodicState { .. } => "no_positive_periodic_state",
        NoConvergence { .. } => "no_convergence",
        NoCriticalLength { .. } => "no_critical_length",
        TruncationFailure { .. } => "truncation_failure",
        NonpositiveLinearization(_) => "nonpositive_linearization",
        RegimeError(_) => "regime_error",
        BracketFailure(_) => "bracket_failure",
        StepRejected { .. } => "step_rejected",
        DomainCollapse { .. } => "domain_collapse",
    }
}

pub type Result<T> = std::result::Result<T, RunError>;
