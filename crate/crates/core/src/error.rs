use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("generator matrix is invalid: {0}")]
    NonGenerator(String),
    #[error("generator matrix is reducible: state {0} cannot reach every other state")]
    Reducible(usize),
    #[error("service rate mu[{0}] = {1} must be strictly positive")]
    NonpositiveService(usize, f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("linear system is singular")]
    Singular,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("states {0} and {1} have identical envelope curves; extremal path is not unique")]
    TieUnresolved(usize, usize),
    #[error("transition {0} -> {1} along the extremal path has zero rate; prefactor undefined")]
    NotRegular(usize, usize),
    #[error("unsupported degeneracy: {0}")]
    UnsupportedDegeneracy(String),
    #[error("extremal path has no switches; boundary is an atom")]
    NoSwitches,
    #[error("initial law puts no mass on the first state {0} of the maximizing path")]
    InitialLawOffPath(usize),
    #[error("CFL number {0:.3} exceeds 0.9")]
    CflViolation(f64),
    #[error("grid upper edge {a_max} lies below the attainable maximum {bound}")]
    DomainTooSmall { a_max: f64, bound: f64 },
    #[error("point (a = {a}, t = {t}) lies outside the grid")]
    OutOfGrid { a: f64, t: f64 },
    #[error("arguments must be positive: {0}")]
    NonpositiveInput(String),
    #[error("level {a} does not exceed the attainable maximum {bound}")]
    NotRareRange { a: f64, bound: f64 },
    #[error("level {a} lies outside the attainable range [{lower}, {upper}]")]
    OutOfRange { a: f64, lower: f64, upper: f64 },
    #[error("invalid importance-sampling windows: {0}")]
    InvalidWindows(String),
    #[error("search bracket does not contain the target: {0}")]
    BracketFailure(String),
}

impl Error {
    /// Errors caused by the caller's input rather than a numerical breakdown.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::NonGenerator(_)
                | Error::Reducible(_)
                | Error::NonpositiveService(..)
                | Error::Dimension(_)
                | Error::InvalidArgument(_)
                | Error::NonpositiveInput(_)
                | Error::NotRareRange { .. }
                | Error::OutOfRange { .. }
                | Error::OutOfGrid { .. }
                | Error::InvalidWindows(_)
                | Error::CflViolation(_)
                | Error::DomainTooSmall { .. }
        )
    }
}
