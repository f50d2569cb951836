use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure mode surfaced by the library.
///
/// The CLI maps these onto exit codes and the `kind` string of its error
/// artifact, so variants are stable and coarse rather than per-call-site.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid nest: {0}")]
    InvalidNest(String),

    #[error("atom index {index} out of range 1..={count}")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("growth condition n_k >= 4 * sum_(i<k) n_i fails at atom {atom}")]
    Growth { atom: usize },

    #[error("rank budget exceeded in block {block}: captured rank {rank} > budget {budget}")]
    Budget {
        block: usize,
        rank: usize,
        budget: usize,
    },

    #[error("certification failed: residual {residual:e} exceeds tolerance {tol:e}")]
    Certification { residual: f64, tol: f64 },

    #[error("growth hypothesis fails at window {window}: {reason}")]
    Hypothesis { window: usize, reason: String },

    #[error("matrix is singular at z = {re} + {im}i (resolvent norm {norm:e})")]
    Singular { re: f64, im: f64, norm: f64 },

    #[error("spectrum meets the contour at node {node} (resolvent norm {norm:e})")]
    ContourCollision { node: usize, norm: f64 },

    #[error("||P - E|| = {distance} is not below 1/2")]
    Conditioning { distance: f64 },

    #[error("empty isometry family: {0}")]
    EmptyFamily(String),

    #[error("truncation too small: {0}")]
    Truncation(String),

    #[error("off-corner blocks of S^-1 B S have norm {residual:e} above {bound:e}")]
    BlockStructure { residual: f64, bound: f64 },

    #[error("linear algebra backend: {0}")]
    Linalg(String),
}

impl Error {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidNest(_) => "invalid_nest",
            Error::IndexOutOfRange { .. } => "index",
            Error::Shape(_) => "shape",
            Error::Precondition(_) => "precondition",
            Error::Growth { .. } => "growth",
            Error::Budget { .. } => "budget",
            Error::Certification { .. } => "certification",
            Error::Hypothesis { .. } => "hypothesis",
            Error::Singular { .. } => "singular",
            Error::ContourCollision { .. } => "contour_collision",
            Error::Conditioning { .. } => "conditioning",
            Error::EmptyFamily(_) => "empty_family",
            Error::Truncation(_) => "truncation",
            Error::BlockStructure { .. } => "block_structure",
            Error::Linalg(_) => "linalg",
        }
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(err: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(err.to_string())
    }
}
