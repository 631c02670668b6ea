use thiserror::Error;

use crate::scenario::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {}", format_violations(.0))]
    InvalidConfig(Vec<Violation>),

    #[error("point {point:?} coincides with antenna {antenna}")]
    SingularGeometry { antenna: usize, point: [f64; 3] },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("input matrix is not positive semidefinite: {what} (min eigenvalue {min_eigenvalue:e})")]
    NonPsdInput { what: &'static str, min_eigenvalue: f64 },

    #[error("matrix is not Hermitian: {0}")]
    NotHermitian(String),

    #[error("Fisher information matrix is singular (condition estimate {condition:e})")]
    SingularFim {
        condition: f64,
        /// Unit eigenvector of the equilibrated FIM belonging to its smallest eigenvalue.
        null_direction: Vec<f64>,
    },

    #[error("reflection-coefficient block of the FIM is singular")]
    SingularBlock,

    #[error("configuration is not symmetric: {0}")]
    ConfigNotSymmetric(String),

    #[error("target {target} has zero reflection coefficient")]
    ZeroReflection { target: usize },

    #[error("user {user} receives no useful signal from its beam covariance")]
    DegenerateBeam { user: usize },

    #[error("design is infeasible: {0}")]
    Infeasible(crate::designs::FeasibilityReport),

    #[error("solver stopped at its numerical limit: {0}")]
    NumericalLimit(String),

    #[error("operation requires {0}")]
    Unsupported(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Parse(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
