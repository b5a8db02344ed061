use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {message}\n  hint: {hint}")]
    Config { message: String, hint: String },
    #[error("runtime error: {message}\n  hint: {hint}")]
    Runtime { message: String, hint: String },
}

impl CliError {
    pub fn config(message: impl Into<String>, hint: impl Into<String>) -> Self {
        CliError::Config { message: message.into(), hint: hint.into() }
    }

    pub fn runtime(message: impl Into<String>, hint: impl Into<String>) -> Self {
        CliError::Runtime { message: message.into(), hint: hint.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Runtime { .. } => 3,
        }
    }
}

/// Wraps a library error with a remedy hint.
pub(crate) fn runtime<E: std::fmt::Display>(hint: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::runtime(e.to_string(), hint)
}
