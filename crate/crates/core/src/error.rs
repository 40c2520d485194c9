use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of the model.
    #[error("domain error: {0}")]
    Domain(String),

    /// One or more joint angles are outside the chain's limits (1-based joint numbers).
    #[error("joint limit violation at joint(s) {joints:?}")]
    LimitViolation { joints: Vec<usize> },

    #[error("target distance {distance:.4} m is unreachable (reachable band {min:.4}..{max:.4} m)")]
    Unreachable { distance: f64, min: f64, max: f64 },

    /// A strength query landed outside the grid hull.
    #[error("strength query (shoulder {shoulder_deg:.2} deg, elbow {elbow_deg:.2} deg) lies outside the grid")]
    Extrapolation { shoulder_deg: f64, elbow_deg: f64 },

    #[error("degenerate population: strength {0:.4} N·m is not positive")]
    DegeneratePopulation(f64),

    #[error("invalid strength grid: {0}")]
    Grid(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
