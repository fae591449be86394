use std::fmt;

use adaptsig_core::Error as CoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Validation = 1,
    Runtime = 2,
    Interrupted = 3,
}

/// A failure carrying the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn validation(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: ExitKind::Validation,
            error: error.into(),
        }
    }

    pub fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: ExitKind::Runtime,
            error: error.into(),
        }
    }

    pub fn interrupted() -> Self {
        Self {
            kind: ExitKind::Interrupted,
            error: anyhow::anyhow!("interrupted"),
        }
    }

    pub fn code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // core errors already embed their source in the message
        let mut shown = String::new();
        for cause in self.error.chain() {
            let text = cause.to_string();
            if shown.contains(&text) {
                continue;
            }
            if !shown.is_empty() {
                shown.push_str(": ");
            }
            shown.push_str(&text);
        }
        f.write_str(&shown)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait Context<T> {
    /// Failure while loading inputs: always a validation error.
    fn input(self, what: &str) -> CliResult<T>;
    /// Failure while running: I/O problems are runtime errors, rejected
    /// parameters or plans are validation errors.
    fn runtime(self, what: &str) -> CliResult<T>;
}

impl<T> Context<T> for Result<T, CoreError> {
    fn input(self, what: &str) -> CliResult<T> {
        self.map_err(|e| CliError::validation(anyhow::Error::new(e).context(what.to_string())))
    }

    fn runtime(self, what: &str) -> CliResult<T> {
        self.map_err(|e| {
            let kind = match e {
                CoreError::Io { .. } | CoreError::EmptyFront => ExitKind::Runtime,
                _ => ExitKind::Validation,
            };
            CliError {
                kind,
                error: anyhow::Error::new(e).context(what.to_string()),
            }
        })
    }
}
