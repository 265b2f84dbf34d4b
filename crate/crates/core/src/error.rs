use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("tensor of {requested} elements exceeds the element budget of {budget}")]
    Capacity { requested: usize, budget: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("observation n={0} has no season label")]
    MissingLabel(usize),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("ill-conditioned scores: eigenvalue {index} is {value:e}, below the floor {floor:e}")]
    IllConditioned { index: usize, value: f64, floor: f64 },

    #[error("lag h={h} needs h <= N-2, but N={n}")]
    InsufficientLag { h: usize, n: usize },

    #[error("degenerate covariance: trace {0:e} is within the numerical floor of zero")]
    DegenerateCovariance(f64),

    #[error("bandwidth q={q} exceeds N-h-1={limit}; choose a smaller bandwidth")]
    BandwidthTooLarge { q: usize, limit: usize },

    #[error("invalid kernel: {0}")]
    Kernel(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty eigenvalue list")]
    EmptyEigenvalues,

    #[error("replicate {index} failed: {source}")]
    Replicate { index: usize, source: Box<Error> },
}
