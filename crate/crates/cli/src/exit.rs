//! Exit codes.
//!
//! | code | meaning |
//! |------|---------|
//! | 0  | success: converged, attracts, or every check passed |
//! | 1  | a verification suite found a violation |
//! | 2  | inconclusive, or no attractor where none is expected |
//! | 3  | attraction fails where an attractor is expected |
//! | 64 | usage error (unknown system, bad flag or config) |
//! | 65 | malformed input data (forcing file) |
//! | 70 | internal failure (solver, I/O) |

use std::fmt;

pub const OK: u8 = 0;
pub const VIOLATION: u8 = 1;
pub const INCONCLUSIVE: u8 = 2;
pub const FAILS_EXPECTED: u8 = 3;
pub const USAGE: u8 = 64;
pub const DATA: u8 = 65;
pub const SOFTWARE: u8 = 70;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: USAGE,
            message: message.into(),
        }
    }

    pub fn format(message: impl Into<String>) -> Self {
        Self {
            code: DATA,
            message: message.into(),
        }
    }

    pub fn software(message: impl Into<String>) -> Self {
        Self {
            code: SOFTWARE,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ges_core::Error> for CliError {
    fn from(e: ges_core::Error) -> Self {
        use ges_core::Error;
        let code = match &e {
            Error::Usage(_) | Error::Unsupported { .. } => USAGE,
            Error::Format(_) => DATA,
            _ => SOFTWARE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::software(format!("i/o: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
