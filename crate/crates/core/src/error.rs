use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is numerically singular (sigma_min/sigma_max = {ratio:e})")]
    SingularMatrix { ratio: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("eigenvector basis could not be formed: {0}")]
    DefectiveMatrix(String),
    #[error("iterative decomposition did not converge")]
    ConvergenceFailure,
    #[error("unsupported constellation order {0}")]
    UnsupportedOrder(usize),
    #[error("unknown constellation name {0:?}")]
    UnknownConstellation(String),
    #[error("constellation needs at least two points")]
    TooFewPoints,
    #[error("bit label has length {got}, expected {expected}")]
    BadLabelLength { got: usize, expected: usize },
    #[error("point {0} is not a constellation member")]
    NotAMember(Complex64),
    #[error("channel realization is degenerate: {0}")]
    ChannelDegenerate(String),
    #[error("codewords come from different codes")]
    CodeMismatch,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("search space of {size} hypotheses exceeds the limit {limit}")]
    SearchSpaceTooLarge { size: f64, limit: f64 },
    #[error("generator matrix is rank deficient")]
    RankDeficientGenerator,
    #[error("difference vector violates the nonzero-CPD structure at symbol {0}")]
    CpdZeroConstellation(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("certificate failed: {0}")]
    CertificateFailed(String),
    #[error("not enough data points: {0}")]
    InsufficientData(String),
    #[error("zero BER among the tail points used for the slope fit")]
    ZeroBerInTail,
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}
