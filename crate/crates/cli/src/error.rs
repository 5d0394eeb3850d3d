//! Two failure classes with distinct exit codes: configuration problems
//! (exit 1) and failures while the experiment is running (exit 2).

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: unreadable or malformed config, missing or invalid
    /// fields, unusable output directory. Exit code 1.
    Validation(String),
    /// The experiment itself failed: training diverged, artifact writes
    /// failed mid-run, numeric degeneracy. Exit code 2.
    Runtime(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    /// Single-line rendering for stderr: `error: <class>: <message>`.
    pub fn render(&self) -> String {
        let (class, msg) = match self {
            CliError::Validation(m) => ("validation", m),
            CliError::Runtime(m) => ("runtime", m),
        };
        let flat = msg.replace('\n', " ");
        format!("error: {class}: {flat}")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

pub fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

pub fn runtime(err: impl fmt::Display) -> CliError {
    CliError::Runtime(err.to_string())
}

/// Library errors surfaced while checking inputs count as validation.
pub fn invalid(err: impl fmt::Display) -> CliError {
    CliError::Validation(err.to_string())
}
