use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by a series with vanishing constant term")]
    DivisionBySingularSeries,
    #[error("square root of a series with non-positive leading term {0}")]
    NegativeLeadingTerm(f64),
    #[error("contraction is singular: kinetic weight {0} is not positive")]
    ContractionSingularity(f64),
    #[error("step sequence is not palindromic")]
    NonPalindromicSequence,
    #[error("step sequence is inconsistent: kinetic sum {kinetic}, potential sum {potential} (both must be 1)")]
    InconsistentSequence { kinetic: f64, potential: f64 },
    #[error("parameter {name} = {value} outside [{lower}, {upper}]")]
    ParameterOutOfRange { name: &'static str, value: f64, lower: f64, upper: f64 },
    #[error("{0} has no step-sequence form")]
    NoStepForm(&'static str),
    #[error("zeta_1 = 1 + {0:e} is below unity; the contraction is non-physical")]
    SubunityZeta(f64),
    #[error("truncation order {order} too shallow, need at least {needed}")]
    TruncationTooShallow { order: usize, needed: usize },
    #[error("no step size yields a relative error within [{floor:e}, {cap:e}]")]
    WindowEmpty { floor: f64, cap: f64 },
    #[error("root refinement did not converge after {0} iterations")]
    NonConvergence(usize),
    #[error("kernel is not integrable: mu_1 = {0} is not positive")]
    NonIntegrableKernel(f64),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Configuration mistakes as opposed to numerical failures.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::InvalidArgument(_)
                | Error::InvalidGrid(_)
                | Error::ParameterOutOfRange { .. }
                | Error::NoStepForm(_)
                | Error::NonPalindromicSequence
                | Error::InconsistentSequence { .. }
        )
    }
}
