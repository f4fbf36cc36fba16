use thiserror::Error;

use crate::quantum::Picture;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("boundary violation: population {population:.3e} on the outermost {block} momentum point")]
    Boundary { block: &'static str, population: f64 },

    #[error("wrong picture: expected {expected:?}, got {found:?}")]
    WrongPicture { expected: Picture, found: Picture },

    #[error("integration diverged at t = {time}: {invariant}")]
    Diverged { invariant: String, time: f64 },

    #[error("particle {index}: {source}")]
    ParticleDiverged {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("non-physical state: minimum eigenvalue {min_eigenvalue:.3e}")]
    NonPhysicalState { min_eigenvalue: f64 },

    #[error("order q = 1 is the Shannon/von Neumann limit; use shannon() or von_neumann()")]
    UseShannon,

    #[error("invalid field kind: expected {expected}, got {found}")]
    InvalidKind { expected: &'static str, found: &'static str },

    #[error("bound violation: {quantity} gain {gain:.6} exceeds {limit:.6} at t = {time}")]
    BoundViolation {
        quantity: String,
        time: f64,
        gain: f64,
        limit: f64,
    },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("incompatible bundles: {0}")]
    IncompatibleBundles(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed output file {path}: {reason}")]
    Malformed { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BoundViolation { .. } => 2,
            Error::Diverged { .. }
            | Error::ParticleDiverged { .. }
            | Error::NonPhysicalState { .. }
            | Error::Boundary { .. } => 3,
            Error::Io(_) => 1,
            _ => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
