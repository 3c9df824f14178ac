use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument was outside the domain of the operation.
    #[error("domain error in {what}: {reason}")]
    Domain { what: &'static str, reason: String },

    /// The observed data do not satisfy the selection event `x ≺ y`.
    #[error("selection event not satisfied: max x = {x_max} is not below y = {y}")]
    SelectionNotSatisfied { x_max: f64, y: f64 },

    /// A root could not be bracketed.
    #[error("root bracketing failed in {what} after {expansions} expansions (last bracket [{lo}, {hi}])")]
    Bracketing {
        what: &'static str,
        expansions: usize,
        lo: f64,
        hi: f64,
    },

    /// An iterative routine exhausted its budget.
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// Quadrature ran out of panels or produced a non-finite value.
    #[error("quadrature failed in {what}: {panels} panels used ({reason})")]
    Quadrature {
        what: &'static str,
        panels: usize,
        reason: &'static str,
    },

    /// A quantity that must be monotone was found not to be.
    #[error("monotonicity violated in {what} at {at}: {detail}")]
    Monotonicity {
        what: &'static str,
        at: f64,
        detail: String,
    },

    /// A distribution whose truncation window carries no representable mass.
    #[error("degenerate truncation window ({lower}, {upper}) for N({mu}, {scale}^2): log mass {log_mass}")]
    DegenerateTruncation {
        mu: f64,
        scale: f64,
        lower: f64,
        upper: f64,
        log_mass: f64,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, reason: impl Into<String>) -> Error {
    Error::Domain {
        what,
        reason: reason.into(),
    }
}
