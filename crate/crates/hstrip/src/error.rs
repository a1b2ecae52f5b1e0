use thiserror::Error;

/// Everything that can go wrong in the library.
///
/// Variants are split into configuration problems (bad input data) and
/// numerical guards (a computation refused to produce a result). The CLI maps
/// the two groups to different exit codes via [`Error::is_config`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid base graph: {0}")]
    InvalidGraph(String),
    #[error("invalid weight `{field}`: {reason}")]
    InvalidWeight { field: String, reason: String },
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },
    #[error("level {level} outside strip [{lo}, {hi}]")]
    LevelOutOfRange { level: i64, lo: i32, hi: i32 },
    #[error("vertex {0} not in graph")]
    VertexOutOfRange(usize),
    #[error("edge set is not a spanning tree: {0}")]
    NotSpanningTree(String),
    #[error("{what} guard exceeded: {actual} > {limit}")]
    GuardExceeded {
        what: &'static str,
        limit: usize,
        actual: usize,
    },
    #[error("determinant of A_L(t) + eps is not positive")]
    NonPositiveDeterminant,
    #[error("Cholesky factorization failed at row {0}")]
    Factorization(usize),
    #[error("matching relation violated between positions {0} and {1}")]
    MatchingViolated(i64, i64),
    #[error("local tree variable not in alphabet")]
    NotInAlphabet,
    #[error("deformation too large: |alpha| = {alpha} exceeds c9*eta = {bound}")]
    DeformationTooLarge { alpha: f64, bound: f64 },
    #[error("non-positive Jacobian factor {0}")]
    NonPositiveJacobian(f64),
    #[error("edge {0} is not in the tree")]
    EdgeNotInTree(usize),
    #[error("power iteration did not converge in {0} iterations")]
    NonConvergence(usize),
    #[error("non-positive eigenvector entry {value} at index {index}")]
    NonPositiveEigenvector { index: usize, value: f64 },
    #[error("quadrature underflow: {0}")]
    Underflow(String),
    #[error("c4 estimate is not positive: {0}")]
    NonPositiveC4(f64),
    #[error("insufficient samples for {what}: {value} < {required}")]
    InsufficientSamples {
        what: &'static str,
        value: f64,
        required: f64,
    },
}

impl Error {
    /// True for errors caused by invalid input rather than a numerical guard.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidGraph(_)
                | Error::InvalidWeight { .. }
                | Error::InvalidParameter { .. }
                | Error::LevelOutOfRange { .. }
                | Error::VertexOutOfRange(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_param(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.to_string(),
        reason: reason.into(),
    }
}
