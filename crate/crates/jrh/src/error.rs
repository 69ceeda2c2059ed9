use thiserror::Error;

/// Failures reported by the library. Validation problems and numerical
/// failures are kept apart so that callers can map them to distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum JrhError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point {0} lies within the cut-proximity tolerance of the branch cut")]
    CutAmbiguity(String),
    #[error("point {0} is not on the cut")]
    NotOnCut(String),
    #[error("point {0} is not on a traced arc")]
    NotOnArc(String),
    #[error("point {0} lies on a cut of the phase function")]
    OnCut(String),
    #[error("no admissible integration path to {0}")]
    PathIntersectsCut(String),
    #[error("trace diverged: {0}")]
    TraceDiverged(String),
    #[error("level {0} is too close to the critical level")]
    DegenerateLevel(f64),
    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    QuadNoConverge { tol: f64, estimate: f64 },
    #[error("(A+B)n = {0} is within 1e-12 of an integer")]
    IntegerResonance(String),
    #[error("point is within the exclusion radius of a branch point; use the local formula")]
    NearBranchPoint,
    #[error("point is outside the conformal radius {0}")]
    OutsideConformalRadius(f64),
    #[error("degree reduction: the polynomial has degree {k} instead of {n}")]
    DegreeReduction { n: u32, k: u32 },
    #[error("orthogonality condition violated: {0}")]
    ConditionViolated(String),
    #[error("identity violated: {0}")]
    IdentityViolated(String),
    #[error("zero finder did not converge: {0}")]
    NoConverge(String),
    #[error("{0} is an exact integer; the rate exponent is infinite")]
    ExactInteger(String),
    #[error("rate exponents are inconsistent: {0}")]
    InconsistentExponents(String),
    #[error("precision unreachable: {0}")]
    PrecisionUnreachable(String),
}

impl JrhError {
    /// True for errors caused by bad input rather than by a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            JrhError::InvalidParameters(_)
                | JrhError::InvalidArgument(_)
                | JrhError::ConditionViolated(_)
                | JrhError::IntegerResonance(_)
                | JrhError::ExactInteger(_)
                | JrhError::DegreeReduction { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, JrhError>;
