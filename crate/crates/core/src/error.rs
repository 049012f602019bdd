use thiserror::Error;

/// Errors raised by the numerical kernel, the solvers and the twistor routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grid resolution {0} is below the minimum of 8 nodes")]
    GridTooSmall(usize),

    #[error("matrix violates the {role} invariant (defect {defect:.3e})")]
    RoleViolation { role: &'static str, defect: f64 },

    #[error("principal logarithm undefined: eigenvalue {re:+.6e}{im:+.6e}i lies on the branch cut")]
    BranchCut { re: f64, im: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("discrete operator is numerically singular at block {block}")]
    SingularSystem { block: usize },

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("ODE integration produced non-finite values at node {0}")]
    IntegrationFailure(usize),

    #[error("tangent representatives are linearly dependent (smallest Gram eigenvalue {0:.3e})")]
    DegenerateBasis(f64),

    #[error("moduli point is not on the locus eta = 0 (|eta| = {0:.3e})")]
    NotOnLocus(f64),

    #[error("rotation matrix is not in SO(3) (defect {0:.3e})")]
    NotRotation(f64),

    #[error("transition undefined at zeta = 0")]
    ZetaZero,

    #[error("inverse transition undefined at zeta' = 0")]
    ZetaPrimeZero,

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
