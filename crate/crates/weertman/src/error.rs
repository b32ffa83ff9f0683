//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by grid construction, potential validation, the time
/// loop, analysis fits and the CLI pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Grid construction rejected its arguments.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A vector length does not match the grid it is used with.
    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// A potential violates one of the bistability hypotheses.
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    /// Generic precondition failure on an operation input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Initial data outside the admissible range or with bad end limits.
    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),

    /// The time stepper produced a non-finite value.
    #[error("non-finite state encountered at t = {time}")]
    NonFinite { time: f64 },

    /// The tracked front approached the domain edge with recentering off.
    #[error("front left trusted region at t = {time} (front at x = {front})")]
    FrontLeftTrustedRegion { time: f64, front: f64 },

    /// The evolved state left the invariant range.
    #[error("range violation at t = {time}: u = {value} outside [{lo}, {hi}]")]
    RangeViolation {
        time: f64,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// A least-squares fit had no usable window.
    #[error("no exponential regime found")]
    NoExponentialRegime,

    /// A tail-fit window lies in the underflow region of the profile.
    #[error("window too far")]
    WindowTooFar,

    /// Configuration file or override problem, naming the offending key.
    #[error("config error: {0}")]
    Config(String),

    /// A pipeline stage failed; the stage name is preserved for exit codes.
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
