use thiserror::Error;

/// Errors produced by the solvers in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical or numerical parameter violated a precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Argument outside the domain of a special function or inverse map.
    #[error("domain error: {0}")]
    Domain(String),

    /// A pole of the Gamma function was hit.
    #[error("gamma pole at x = {0}")]
    GammaPole(f64),

    /// The adaptive ODE integrator could not advance.
    #[error("integrator stalled at {location}: step size {step:e} below minimum")]
    StepSizeUnderflow { location: f64, step: f64 },

    /// An iteration failed to contract.
    #[error("iteration did not contract: {0}")]
    NonContraction(String),

    /// Fixed-point or bisection iteration hit its iteration cap.
    #[error("no convergence after {iterations} iterations: {what}")]
    NoConvergence { what: String, iterations: usize },

    /// Root bracketing failed (no sign change on the bracket).
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    /// The Evans matching window is outside the validity region.
    #[error("overlap window invalid: {0}")]
    OverlapWindow(String),

    /// An Evans evaluation failed its matching-point independence check.
    #[error("evans evaluation invalid: spread {spread:e} exceeds tolerance at lambda = {lambda}, eps = {eps}")]
    SpreadCheck { lambda: f64, eps: f64, spread: f64 },

    /// The spectral bracket contains no eigenvalue crossing (k below k_*).
    #[error("no eigenvalue crossing for k = {k}: min eigenvalue {min_eig:e} > 0 at the lower gamma bracket")]
    NoCrossing { k: f64, min_eig: f64 },

    /// Grid too narrow or too coarse for the requested computation.
    #[error("grid error: {0}")]
    Grid(String),

    /// A least-squares fit was rejected.
    #[error("fit rejected: {0}")]
    PoorFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
