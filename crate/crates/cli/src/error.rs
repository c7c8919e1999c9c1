//! Exit-code classification of command failures.

use std::fmt;

use musebench::model::DataError;
use musebench::prompts::LlmError;
use musebench::report::ReportError;
use musebench::shaping::ShapingError;

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

/// A rejected argument, setting or input combination.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub fn invalid(message: impl Into<String>) -> anyhow::Error {
    Invalid(message.into()).into()
}

/// Walks the error chain: solver refusals first, then I/O, else validation.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let mut io = false;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ShapingError>() {
            if matches!(
                e,
                ShapingError::Infeasible
                    | ShapingError::NoIncumbent { .. }
                    | ShapingError::OracleTooLarge { .. }
            ) {
                return EXIT_SOLVER;
            }
        }
        io |= cause.is::<std::io::Error>()
            || matches!(cause.downcast_ref::<DataError>(), Some(DataError::Io(_)))
            || matches!(
                cause.downcast_ref::<ReportError>(),
                Some(ReportError::Io(_))
            )
            || matches!(
                cause.downcast_ref::<LlmError>(),
                Some(LlmError::Transport { .. } | LlmError::Status { .. } | LlmError::Cache(_))
            );
    }
    if io {
        EXIT_IO
    } else {
        EXIT_VALIDATION
    }
}
