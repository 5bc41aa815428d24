use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("quadrature underresolved: {0}")]
    QuadratureUnderresolved(String),
    #[error("degenerate frequency: eta = 0 has no scaled eigenfunction")]
    DegenerateFrequency,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("aliasing: y-grid of {n_y} points cannot hold |k| <= {k_max} (need {needed})")]
    Aliasing { n_y: usize, k_max: usize, needed: usize },
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("singular fiber: negative homogeneous power on zero-frequency content")]
    SingularFiber,
    #[error("underresolved: {what} (estimated error {estimate:.3e})")]
    Underresolved { what: String, estimate: f64 },
    #[error("overflow: non-finite value in {0}")]
    Overflow(String),
    #[error("zero denominator in {0}")]
    ZeroDenominator(String),
    #[error("non-contraction: {0}")]
    NonContraction(String),
    #[error("step too large: {0}")]
    StepTooLarge(String),
    #[error("inadmissible: {0}")]
    Inadmissible(String),
    #[error("wrap-around: {0}")]
    WrapAround(String),
    #[error("serialization: {0}")]
    Serialization(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
