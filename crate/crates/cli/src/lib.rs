//! Batch driver for pilotwave scenarios: parses scenario files, runs the
//! laboratory operations and writes CSV, JSON and SVG artefacts.

pub mod commands;
pub mod output;
pub mod scenario;
pub mod svg;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("physics invariant violated: {0}")]
    Physics(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Physics(_) => 3,
            CliError::Precondition(_) => 4,
            CliError::Numerical(_) => 5,
        }
    }
}

impl From<pilotwave::Error> for CliError {
    fn from(e: pilotwave::Error) -> Self {
        use pilotwave::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidField(_) => CliError::Physics(msg),
            E::InvalidInput(_) => CliError::Input(msg),
            E::WindowTooSmall { .. } | E::PreconditionViolated { .. } => {
                CliError::Precondition(msg)
            }
            E::NodeProximity(_)
            | E::ExcessNodeAborts { .. }
            | E::UnresolvedExcess { .. }
            | E::StepLimitExceeded { .. }
            | E::SearchExhausted { .. } => CliError::Numerical(msg),
        }
    }
}
