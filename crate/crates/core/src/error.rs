use std::path::PathBuf;

/// Errors raised by the grid calculus, the flow driver and the analysis checks.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value in {context} at node ({i}, {j})")]
    NonFinite { context: &'static str, i: usize, j: usize },
    #[error("grid specs of the operands differ")]
    SpecMismatch,
    #[error("invalid boundary condition: {0}")]
    InvalidBoundary(String),
    #[error("interior window with margin {margin} is empty")]
    EmptyWindow { margin: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{kind} is initial data only; requested t = {t}")]
    InitialDataOnly { kind: &'static str, t: f64 },
    #[error("conformal factor underflows on the sampled domain (v = {v:e})")]
    Underflow { v: f64 },
    #[error("time step {dt:e} exceeds the stability bound {limit:e}")]
    UnstableStep { dt: f64, limit: f64 },
    #[error("non-finite update at t = {t} (step {step}): {context}")]
    BlowUp { t: f64, step: u64, context: &'static str },
    #[error("step budget of {0} steps exhausted before t_end")]
    StepLimit(u64),
    #[error("level set at {level} reaches the boundary window")]
    LevelSetTouchesBoundary { level: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("the origin is not a grid node")]
    OriginNotNode,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for failures of the time integration itself (instability, blow-up, step budget).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::UnstableStep { .. }
                | Error::BlowUp { .. }
                | Error::StepLimit(_)
                | Error::NonFinite { .. }
                | Error::Underflow { .. }
        )
    }
}
