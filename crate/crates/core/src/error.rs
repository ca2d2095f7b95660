use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("vector is not tangent to S^3 at the base point (|<v, p>| = {0:.3e})")]
    NotTangent(f64),

    #[error("singular linear solve: {0}")]
    Singular(String),

    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integration failure: {0}")]
    Integration(String),

    #[error("grid too coarse: phase jump {jump:.3} rad between samples, refine the grid")]
    GridTooCoarse { jump: f64 },

    #[error("interval length {0} is not strictly less than 1/2")]
    InvalidInterval(f64),

    #[error("inconsistent result: {0}")]
    Inconsistent(String),

    #[error("discretization failure: {0}")]
    Discretization(String),

    #[error("ill-conditioned loop: {0}")]
    IllConditioned(String),

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("frame not unitary: symmetry defect {0:.3e}")]
    FrameNotUnitary(f64),

    #[error("not contractible: {0}")]
    NotContractible(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("return failure: {0}")]
    ReturnFailure(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("resolution failure: periods {0} and {1} closer than 1e-9")]
    Resolution(f64, f64),

    #[error("malformed tree: {0}")]
    Structural(String),
}

pub type Result<T> = std::result::Result<T, Error>;
