use std::fmt;

use gfe_core::Error;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Data = 2,
    Pipeline = 3,
    Config = 4,
    Acceptance = 5,
    Gradcheck = 6,
}

#[derive(Debug)]
pub struct Failure {
    pub code: Code,
    pub message: String,
}

impl Failure {
    pub fn new(code: Code, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Code::Config, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn code_for(e: &Error) -> Code {
    match e {
        Error::MalformedLine(_)
        | Error::EmptyFile
        | Error::InvalidLabel(..)
        | Error::LengthMismatch(..)
        | Error::InvalidFrame
        | Error::Io { .. } => Code::Data,
        Error::Parse { source, .. } => match code_for(source) {
            Code::Config => Code::Config,
            _ => Code::Data,
        },
        Error::Config(_)
        | Error::InvalidK(_)
        | Error::InvalidFraction(_)
        | Error::LossUndefined(_)
        | Error::InvalidRegion(_)
        | Error::InvalidOutputCount(_)
        | Error::UnknownReferenceKey(_) => Code::Config,
        _ => Code::Pipeline,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::new(code_for(&e), e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

/// Wraps an I/O error on an output path.
pub fn write_failure(path: &std::path::Path, e: std::io::Error) -> Failure {
    Failure::new(Code::Pipeline, format!("{}: {e}", path.display()))
}
