use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("total dimension {requested} exceeds the configured maximum {max}")]
    DimensionOverflow { requested: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("vector norm {norm} is not 1 within tolerance")]
    NotUnitVector { norm: f64 },
    #[error("operator is not a projector (idempotence defect {idempotence}, hermiticity defect {hermiticity})")]
    NotProjector { idempotence: f64, hermiticity: f64 },
    #[error("operator is not Hermitian (defect {0})")]
    NotHermitian(f64),
    #[error("operator is not positive semidefinite (smallest eigenvalue {0})")]
    NotPsd(f64),
    #[error("operator is zero")]
    ZeroOperator,
    #[error("non-finite entry")]
    NonFinite,
    #[error("family is not orthonormal (max overlap {0})")]
    NotOrthonormal(f64),
    #[error("projectors are not mutually orthogonal (defect {0})")]
    NotOrthogonal(f64),
    #[error("sub-basis does not span the declared range: {0}")]
    SubspaceMismatch(String),
    #[error("basis vector {index} is not a simple tensor (second singular value {singular_value})")]
    NotUnentangledBasis { index: usize, singular_value: f64 },
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),
    #[error("frame function value {0} is negative beyond tolerance")]
    PositivityViolation(f64),
    #[error("frame value carries imaginary residue {0}")]
    ImaginaryResidue(f64),
    #[error("dyadic and trace routes disagree by {difference} (budget {budget})")]
    TruncationBudgetExceeded { difference: f64, budget: f64 },
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
