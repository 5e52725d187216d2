use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("exponent difference {0} is not an integer; the singularity cannot be apparent")]
    NotIntegerExponent(Complex64),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("dependent sequence family: Casorati determinant vanishes identically")]
    DependentFamily,

    #[error("non-generic flag order: Casorati determinant of the first {0} sequences vanishes")]
    NonGenericFlag(usize),

    #[error("kernel of dimension {dim} at base {base}: {reason}")]
    Kernel {
        base: Complex64,
        dim: usize,
        reason: &'static str,
    },

    #[error("degenerate determinant: expected degree {expected}, got {got}")]
    DegenerateDeterminant { expected: usize, got: usize },

    #[error("degree cap exceeded: {0}")]
    DegreeCap(String),

    #[error("non-generic parameters: {0}")]
    NonGeneric(String),

    #[error("integration failed on segment {from} -> {to}: {reason}")]
    Integration {
        from: Complex64,
        to: Complex64,
        reason: String,
    },

    #[error("coaxial regime unsupported: some combination a1 +- a2 +- a3 is an integer")]
    Coaxial,

    #[error("numerical inconsistency: {0}")]
    Inconsistent(String),
}

impl Error {
    /// Stable machine-readable identifier used in JSON error reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::NotIntegerExponent(_) => "not_integer_exponent",
            Error::SingularSystem(_) => "singular_system",
            Error::SolverFailure(_) => "solver_failure",
            Error::DependentFamily => "dependent_family",
            Error::NonGenericFlag(_) => "non_generic_flag",
            Error::Kernel { .. } => "kernel_dimension",
            Error::DegenerateDeterminant { .. } => "degenerate_determinant",
            Error::DegreeCap(_) => "degree_cap",
            Error::NonGeneric(_) => "non_generic",
            Error::Integration { .. } => "integration",
            Error::Coaxial => "coaxial",
            Error::Inconsistent(_) => "numerical_inconsistency",
        }
    }

    /// Input problems (as opposed to numerical failures).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_) | Error::NotIntegerExponent(_) | Error::Coaxial
        )
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
