use std::fmt;
use std::process::ExitCode;

use nfisac_core::Error;

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Infeasible(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Infeasible(_) => EXIT_INFEASIBLE,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "{m}"),
            Failure::Infeasible(m) => write!(f, "infeasible: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Infeasible(_) => Failure::Infeasible(msg),
            Error::NumericalLimit(_) | Error::SingularFim { .. } | Error::SingularBlock | Error::DegenerateBeam { .. } => {
                Failure::Numerical(msg)
            }
            _ => Failure::Config(msg),
        }
    }
}
