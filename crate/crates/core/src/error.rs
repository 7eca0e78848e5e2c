use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter or configuration field violates its allowed range.
    InvalidParameter { field: &'static str, reason: String },
    /// An input state or value contained NaN or infinity.
    NonFinite { field: &'static str },
    /// The state norm exceeded the overflow guard.
    Divergence { t: f64 },
    /// The adaptive integrator could not meet its tolerance.
    StepUnderflow { t: f64, dt: f64 },
    /// A mode amplitude fell below the floor where its phase is meaningless.
    PhaseUndefined { t: f64, mode: &'static str },
    /// A fluctuation variance that must be positive was not.
    UnphysicalCovariance { value: f64 },
    /// An averaging window contained no samples.
    EmptyWindow,
    /// Logic regions need the `mu = 0` row and `lambda = 0` column.
    MissingZeroAxis { axis: &'static str },
    /// A field of the wrong kind was passed.
    WrongFieldKind,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { field, reason } => {
                write!(f, "invalid parameter `{field}`: {reason}")
            }
            Error::NonFinite { field } => write!(f, "non-finite value in `{field}`"),
            Error::Divergence { t } => write!(f, "divergence at t={t}"),
            Error::StepUnderflow { t, dt } => {
                write!(f, "step size underflow at t={t} (dt={dt:e})")
            }
            Error::PhaseUndefined { t, mode } => {
                write!(f, "phase undefined at t={t} (|{mode}| below amplitude floor)")
            }
            Error::UnphysicalCovariance { value } => {
                write!(f, "unphysical covariance (variance term {value:e} is not positive)")
            }
            Error::EmptyWindow => write!(f, "empty averaging window"),
            Error::MissingZeroAxis { axis } => {
                write!(f, "grid does not contain the {axis} = 0 line needed for switch-open corners")
            }
            Error::WrongFieldKind => write!(f, "operation requires a field of a different kind"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn require(cond: bool, field: &'static str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            reason: String::from(reason),
        })
    }
}
