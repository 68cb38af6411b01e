use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the numerical core.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A parameter lies outside its legal range.
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    /// Fields live on different grids.
    GridMismatch,
    /// An iterated logarithm was applied to a nonpositive intermediate.
    Domain { iterate: u32, value: f64 },
    /// A tower of exponentials exceeds `f64` range.
    Overflow { height: u32 },
    /// An iterative solver stopped before reaching its tolerance.
    NoConvergence { iterations: usize, residual: f64 },
    /// A supremum kept growing while its search bracket was widened.
    Unbounded { what: &'static str },
    /// Initial data violates a hypothesis.
    InvalidInitialData(String),
    /// Too few records to classify a trajectory.
    TooShort { records: usize, required: usize },
    /// The λ recipe of the logarithmic interpolation inequality failed.
    Construction(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter {
                name,
                value,
                expected,
            } => write!(f, "invalid {name} = {value}: expected {expected}"),
            Error::GridMismatch => f.write_str("fields are defined on different grids"),
            Error::Domain { iterate, value } => write!(
                f,
                "iterated logarithm undefined: iterate {iterate} has nonpositive argument {value}"
            ),
            Error::Overflow { height } => {
                write!(f, "exponential tower of height {height} overflows f64")
            }
            Error::NoConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "linear solver did not converge after {iterations} iterations (relative residual {residual:e})"
            ),
            Error::Unbounded { what } => write!(f, "{what} does not stabilize"),
            Error::InvalidInitialData(msg) => write!(f, "invalid initial data: {msg}"),
            Error::TooShort { records, required } => write!(
                f,
                "trajectory has {records} records, at least {required} are required"
            ),
            Error::Construction(msg) => write!(f, "construction failed: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_param(name: &'static str, value: f64, ok: bool, expected: &'static str) -> Result<()> {
    if ok && !value.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            expected,
        })
    }
}
