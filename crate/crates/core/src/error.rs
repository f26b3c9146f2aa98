use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// `p >= p*(n)`: no positive decaying solution exists for any shift or coupling.
    #[error("exponent p = {p} is at or above the critical Sobolev exponent for n = {n}; no positive solution exists")]
    SupercriticalExponent { n: u32, p: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shift omega must be positive, got {0}")]
    NonpositiveOmega(f64),

    #[error("initial amplitude scan found no overshoot/undershoot bracket")]
    NoBracket,

    #[error("bisection did not reach tolerance within {0} iterations")]
    MaxIterations(usize),

    #[error("integrator failure at r = {r}: {reason}")]
    Integration { r: f64, reason: String },

    #[error("degenerate tail: {0}")]
    DegenerateTail(String),

    #[error("root scan found no sign change although the asymptotics predict a root")]
    RootScanExhausted,

    #[error("root lies outside the representable range of omega")]
    RootOutOfRange,

    #[error("consistency violated: |1 + k*mass - omega| = {defect:e} at omega = {omega}")]
    ConsistencyViolation { omega: f64, defect: f64 },
}

impl Error {
    /// True when the error encodes mathematical nonexistence rather than a numerical failure.
    pub fn is_nonexistence(&self) -> bool {
        matches!(self, Error::SupercriticalExponent { .. })
    }
}
