use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("singular at origin: {0}")]
    SingularAtOrigin(&'static str),

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    QuadratureNonConvergence {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("integrand returned a non-finite value at {at}")]
    NonFiniteIntegrand { at: f64 },

    #[error("non-finite function value while differencing coordinate {coordinate:?}")]
    NonFiniteEvaluation { coordinate: Option<usize> },

    #[error("probability {value} is outside [0, 1] beyond tolerance")]
    ProbabilityOutOfRange { value: f64 },

    #[error("record {index}: {reason}")]
    InvalidRecord { index: usize, reason: String },

    #[error("record {index}: non-finite log-likelihood contribution ({source})")]
    Contribution {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no records")]
    NoRecords,

    #[error("line {line}, field {field}: {message}")]
    Parse {
        line: u64,
        field: String,
        message: String,
    },

    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { id: String, line: u64 },

    #[error("io: {0}")]
    Io(String),

    #[error("at least {required} Monte-Carlo draws required, got {got}")]
    InsufficientDraws { required: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
