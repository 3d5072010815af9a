use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the numerical routines.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A size parameter is outside its legal range.
    InvalidDimension {
        what: &'static str,
        value: usize,
    },
    /// A real parameter is outside its domain.
    Domain {
        param: &'static str,
        value: f64,
        expected: &'static str,
    },
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// The number of subsets `C(n, u)` exceeds the enumeration budget.
    EnumerationTooLarge {
        n: usize,
        u: usize,
        count: u128,
        budget: u64,
    },
    /// Cholesky factorization failed.
    NotPositiveDefinite,
    NonFinite {
        what: &'static str,
    },
    /// Too few points, degenerate inputs and similar numerical failures.
    Numerical(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDimension { what, value } => {
                write!(f, "invalid dimension: {what} = {value}")
            }
            Error::Domain {
                param,
                value,
                expected,
            } => write!(
                f,
                "{param} = {value} is out of domain (expected {expected})"
            ),
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(
                f,
                "dimension mismatch for {what}: expected {expected}, found {found}"
            ),
            Error::EnumerationTooLarge {
                n,
                u,
                count,
                budget,
            } => write!(
                f,
                "enumeration too large: C({n}, {u}) = {count} exceeds budget {budget}"
            ),
            Error::NotPositiveDefinite => f.write_str("matrix is not positive definite"),
            Error::NonFinite { what } => write!(f, "{what} contains NaN or infinite values"),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn domain(param: &'static str, value: f64, expected: &'static str) -> Error {
    Error::Domain {
        param,
        value,
        expected,
    }
}
