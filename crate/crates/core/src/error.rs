use thiserror::Error;

/// Errors raised by the numerical modules.
///
/// Messages are meant to be shown to the user verbatim, so every variant
/// carries enough context to locate the failing input.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite input `{name}` = {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error(
        "grid too coarse: levels {lower} and {upper} collide at eta = {eta} \
         (gap {gap:.3e} below {tolerance:.1e})"
    )]
    LevelCollision {
        eta: f64,
        lower: usize,
        upper: usize,
        gap: f64,
        tolerance: f64,
    },

    #[error(
        "truncation window too short at eta = {eta}: level {level} keeps mass {mass:.3e} \
         near the far cut (limit {limit:.1e})"
    )]
    WindowTooShort {
        eta: f64,
        level: usize,
        mass: f64,
        limit: f64,
    },

    #[error("branch tracking failed for n = {n} between eta = {eta_left} and eta = {eta_right}: {reason}")]
    BranchTracking {
        n: usize,
        eta_left: f64,
        eta_right: f64,
        reason: String,
    },

    #[error("bracketing failed on [{lo}, {hi}]: {reason}")]
    Bracketing { lo: f64, hi: f64, reason: String },

    #[error("root at search boundary eta = {eta}; widen the search interval [{lo}, {hi}]")]
    RootAtBoundary { eta: f64, lo: f64, hi: f64 },

    #[error("boundary data missing: {0}")]
    MissingBoundaryData(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("quadrature tail did not converge: {0}")]
    TailNotConverged(String),

    #[error("sum over levels did not converge after {terms} terms")]
    SumNotConverged { terms: usize },

    #[error("derivative check failed at ({x1}, {x2}): analytic {analytic:.6e} vs finite difference {numeric:.6e}")]
    DerivativeMismatch {
        x1: f64,
        x2: f64,
        analytic: f64,
        numeric: f64,
    },

    #[error("oracle problem too large: {unknowns} unknowns exceeds cap {cap}")]
    CapExceeded { unknowns: usize, cap: usize },

    #[error("banded factorization broke down at pivot {index} even after shifting tau by {shift:.1e}")]
    FactorizationBreakdown { index: usize, shift: f64 },

    #[error("integration step size underflow near t = {t}, x = ({x1}, {x2}); likely gliding tangency")]
    StepUnderflow { t: f64, x1: f64, x2: f64 },

    #[error("energy drift {drift:.3e} exceeds tolerance {limit:.3e} at t = {t}")]
    EnergyDrift { t: f64, drift: f64, limit: f64 },

    #[error("trajectory left the hop regime at hop {hop}: eta = {eta}")]
    RegimeExit { hop: usize, eta: f64 },

    #[error("cache error: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { name, value })
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
