use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point} lies outside the domain")]
    OutsideDomain { point: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite integrand at quadrature node {index} ({point})")]
    NonFiniteNode { index: usize, point: String },

    #[error(
        "Gram matrix is not numerically positive semidefinite (smallest eigenvalue {min_eigenvalue:e}, \
         trace {trace:e}); increase radial_order/angular_order"
    )]
    NotPositiveSemidefinite { min_eigenvalue: f64, trace: f64 },

    #[error("Cholesky breakdown at pivot {pivot}; lower the basis degree M")]
    RankDeficient { pivot: usize },

    #[error("orthonormality residual {residual:e} exceeds {limit:e}; lower the basis degree M")]
    OrthonormalityResidual { residual: f64, limit: f64 },

    #[error("degenerate sample: all monomial coefficients vanish")]
    DegenerateSample,

    #[error("argument-principle integral did not converge on circle |z - {center}| = {radius}")]
    ContourFailure { center: String, radius: f64 },

    #[error("zero sets disagree on {0}")]
    MismatchedSamples(String),

    #[error("config: {0}")]
    Config(String),

    #[error("unknown config key `{key}`; valid keys: {valid}")]
    UnknownKey { key: String, valid: String },

    #[error("basis cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
