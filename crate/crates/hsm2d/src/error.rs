//! Error taxonomy shared by every module of the solver.
//!
//! The variants partition failures by who has to act: [`HsmError::InvalidSpec`]
//! means the caller passed an inconsistent configuration, [`HsmError::Mesh`]
//! means a mesh violates a structural requirement, and the remaining variants
//! report numerical trouble discovered while computing.

use thiserror::Error;

/// Failure cases surfaced by the solver library.
#[derive(Debug, Error)]
pub enum HsmError {
    /// Input outside the mathematical domain of an operation
    /// (argument off the allowed half-plane, point outside a validity region,
    /// evaluation on a branch cut).
    #[error("domain error: {0}")]
    Domain(String),

    /// A result would exceed the floating-point range.
    #[error("overflow: {0}")]
    Overflow(String),

    /// An iterative process hit its cap before reaching tolerance.
    #[error("convergence failure: {0}")]
    ConvergenceFailure(String),

    /// Inconsistent or out-of-range configuration values.
    #[error("invalid parameter: {0}")]
    InvalidSpec(String),

    /// A linear system was numerically singular or a solve failed its
    /// residual check.
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// A mesh failed validation (non-conforming, missing tags, misaligned
    /// interface nodes).
    #[error("mesh error: {0}")]
    Mesh(String),

    /// Underlying file I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl HsmError {
    /// Process exit code the command line front end maps this error to:
    /// 2 for configuration problems, 3 for numerical failures, 4 for mesh
    /// problems, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HsmError::InvalidSpec(_) => 2,
            HsmError::Domain(_)
            | HsmError::Overflow(_)
            | HsmError::ConvergenceFailure(_)
            | HsmError::SingularSystem(_) => 3,
            HsmError::Mesh(_) => 4,
            HsmError::Io(_) => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_partition_the_variants() {
        assert_eq!(HsmError::InvalidSpec("x".into()).exit_code(), 2);
        assert_eq!(HsmError::Domain("x".into()).exit_code(), 3);
        assert_eq!(HsmError::Overflow("x".into()).exit_code(), 3);
        assert_eq!(HsmError::ConvergenceFailure("x".into()).exit_code(), 3);
        assert_eq!(HsmError::SingularSystem("x".into()).exit_code(), 3);
        assert_eq!(HsmError::Mesh("x".into()).exit_code(), 4);
        let io = HsmError::Io(std::io::Error::new(std::io::ErrorKind::Other, "x"));
        assert_eq!(io.exit_code(), 1);
    }
}
