use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the transport routines.
///
/// Input problems (`InvalidInput`, `DimensionMismatch`, ...) are the caller's
/// fault. `IterationLimit` and `InvariantViolation` mean a proven bound or a
/// solver guarantee failed numerically, which is always a bug.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    InvalidInput(String),
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    NonFinite(&'static str),
    ZeroMass,
    SizeGuard {
        what: &'static str,
        size: usize,
        limit: usize,
    },
    UndefinedAtom(usize),
    MarginalMismatch(String),
    NotEpsOptimal {
        excess: f64,
        eps: f64,
    },
    Infeasible,
    Unbounded,
    IterationLimit {
        pivots: usize,
    },
    InvariantViolation(String),
    /// A proven inequality `lhs ≤ rhs + tol` failed.
    BoundViolation {
        what: &'static str,
        lhs: f64,
        rhs: f64,
    },
}

impl Error {
    /// True for failures that indicate a numerical bug rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IterationLimit { .. }
                | Error::InvariantViolation(_)
                | Error::BoundViolation { .. }
                | Error::Infeasible
                | Error::Unbounded
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::ZeroMass => write!(f, "weight vector has zero total mass"),
            Error::SizeGuard { what, size, limit } => {
                write!(f, "{what}: size {size} exceeds limit {limit}")
            }
            Error::UndefinedAtom(i) => write!(f, "map undefined at source atom {i}"),
            Error::MarginalMismatch(msg) => write!(f, "marginal mismatch: {msg}"),
            Error::NotEpsOptimal { excess, eps } => {
                write!(f, "plan excess cost {excess:e} exceeds eps {eps:e}")
            }
            Error::Infeasible => write!(f, "linear program is infeasible"),
            Error::Unbounded => write!(f, "linear program is unbounded"),
            Error::IterationLimit { pivots } => {
                write!(f, "simplex exceeded its pivot cap after {pivots} pivots")
            }
            Error::InvariantViolation(msg) => write!(f, "numerical invariant violated: {msg}"),
            Error::BoundViolation { what, lhs, rhs } => {
                write!(f, "{what} bound violated: lhs {lhs:e} > rhs {rhs:e}")
            }
        }
    }
}

impl core::error::Error for Error {}
