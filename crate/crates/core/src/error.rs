use thiserror::Error;

/// Why a requested wave or critical value does not exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoSolutionReason {
    /// |bZ|/(c1 I) > 1: no positive-class wave for this winding.
    StripBound,
    /// |bZ|/(c1 I1) > 1: class (b) is empty.
    ClassBBound,
    /// |bZ|/(c1 I12) > 1: class (d) is empty.
    ClassDBound,
    /// The requested ell lies outside the admissible interval of its class.
    OutOfRange,
    /// |bm|/(c1 I1 R0) > 1: no annular wave for this angular number.
    AnnulusBound,
    /// No normalising constant exists for this ell.
    Normalisation,
}

impl NoSolutionReason {
    pub fn code(self) -> &'static str {
        match self {
            Self::StripBound => "strip-existence-bound",
            Self::ClassBBound => "class-b-existence-bound",
            Self::ClassDBound => "class-d-existence-bound",
            Self::OutOfRange => "ell-out-of-range",
            Self::AnnulusBound => "annulus-existence-bound",
            Self::Normalisation => "no-normalising-constant",
        }
    }
}

impl std::fmt::Display for NoSolutionReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("{what} failed to converge (residual {residual:e})")]
    NoConvergence { what: String, residual: f64 },
    #[error("quadrature did not reach tolerance: value {partial:e}, error estimate {estimate:e}")]
    Quadrature { partial: f64, estimate: f64 },
    #[error("potential check `{check}` failed at {at}")]
    Potential { check: String, at: f64 },
    #[error("no solution ({reason}): {detail}")]
    NoSolution { reason: NoSolutionReason, detail: String },
    #[error("ODE integration failed at r = {at}: {detail}")]
    Integration { at: f64, detail: String },
    #[error("simulation blew up at t = {time}: {detail}")]
    BlowUp { time: f64, detail: String },
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn no_solution(reason: NoSolutionReason, detail: impl Into<String>) -> Self {
        Self::NoSolution { reason, detail: detail.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
