//! Exit statuses and the machine-readable reason printed on failure.

use minrec_core::Error;
use serde::Serialize;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitCode {
    Ok,
    ConfigError,
    BudgetRefusal,
    /// Not minimal at this entourage, or no covering within K_max.
    CoveringRefusal,
    /// A measured frequency fell below its certified bound, or a cross-check
    /// exceeded its tolerance.
    Violation,
    Io,
    Other,
}

impl ExitCode {
    pub fn status(self) -> i32 {
        match self {
            ExitCode::Ok => 0,
            ExitCode::ConfigError => 2,
            ExitCode::BudgetRefusal => 3,
            ExitCode::CoveringRefusal => 4,
            ExitCode::Violation => 5,
            ExitCode::Io => 6,
            ExitCode::Other => 7,
        }
    }
}

/// A failed run, serialized to stderr as one JSON line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub code: ExitCode,
    pub status: i32,
    pub reason: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

impl Failure {
    pub fn new(code: ExitCode, reason: String) -> Self {
        Failure {
            code,
            status: code.status(),
            reason,
            line: None,
            column: None,
        }
    }

    pub fn config_msg(reason: String) -> Self {
        Self::new(ExitCode::ConfigError, reason)
    }

    pub fn config_at(reason: String, line: usize, column: usize) -> Self {
        Failure {
            line: Some(line),
            column: Some(column),
            ..Self::config_msg(reason)
        }
    }

    /// A library error raised while building objects from the config.
    pub fn config(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) => Self::config_msg(m),
            other => Self::core(other),
        }
    }

    pub fn core(e: Error) -> Self {
        let code = match e {
            Error::BudgetExceeded { .. } => ExitCode::BudgetRefusal,
            Error::NotMinimal { .. } | Error::KMaxExceeded { .. } | Error::NotPrimitive { .. } | Error::NonGrowing => {
                ExitCode::CoveringRefusal
            }
            Error::Violation { .. } => ExitCode::Violation,
            _ => ExitCode::Other,
        };
        Self::new(code, e.to_string())
    }

    pub fn io(context: &str, e: std::io::Error) -> Self {
        Self::new(ExitCode::Io, format!("{context}: {e}"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("failure serializes")
    }
}
