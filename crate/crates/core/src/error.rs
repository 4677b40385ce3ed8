use thiserror::Error;

/// Errors raised by the numerical kernels and experiment builders.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("argument error: {0}")]
    Argument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("graph is not 2-colorable (odd cycle through vertex {0})")]
    NotBipartite(usize),
    #[error("covering schedule infeasible: target needs L >= {min_l}, got {got}")]
    ScheduleInfeasible { min_l: usize, got: usize },
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("ill-conditioned kernel: {0}")]
    Conditioning(String),
    #[error("degenerate block: {0}")]
    DegenerateBlock(String),
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error("integration failed at t = {t}: {msg}")]
    Integration { t: f64, msg: String },
    #[error("mixing not reached within horizon (distance {distance:.3e})")]
    Horizon { distance: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Resource(_) => 3,
            _ => 1,
        }
    }
}
