use std::fmt;

use signkit_core::Error;

pub const INTERNAL: u8 = 1;
pub const USAGE: u8 = 2;
pub const MISSING_MODALITY: u8 = 3;
pub const MISMATCH: u8 = 4;

/// A failed command: the message to print and the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } | Error::Format { .. } | Error::EmptyDataset | Error::UnknownSubject(_) | Error::InvalidConfig(_) => USAGE,
            Error::MissingModality(_) => MISSING_MODALITY,
            Error::VocabularyMismatch(_) | Error::Shape(_) => MISMATCH,
            _ => INTERNAL,
        };
        let mut message = e.to_string();
        if code == MISSING_MODALITY {
            message.push_str("\nhint: this model needs hand volumes (.hpv files next to each sample); generate them with `signkit synth` (hands = true) or choose --model ai-lstm, spatial-ai-lstm or baseline");
        }
        Failure { code, message }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(USAGE, e.to_string())
    }
}
