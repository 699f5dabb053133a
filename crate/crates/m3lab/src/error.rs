use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("parameter rejected: {0}")]
    Param(String),
    #[error("unstable step: renormalization correction {correction:.3e} exceeds 1e-3 at t = {t}")]
    UnstableStep { correction: f64, t: f64 },
    #[error("degenerate spin field: |S_x| < 1e-8 on {fraction:.1}% of points")]
    DegenerateSpin { fraction: f64 },
    #[error("degenerate frame: {fraction:.1}% of points masked")]
    DegenerateFrame { fraction: f64 },
    #[error("identification diverged after {iterations} iterations (update {update:.3e})")]
    IdentificationDiverged { iterations: usize, update: f64 },
    #[error("pole: |a - k t| = {0:.3e} below 1e-10")]
    Pole(f64),
    #[error("format error: {0}")]
    Format(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnstableStep { .. } => 3,
            _ => 2,
        }
    }
}
