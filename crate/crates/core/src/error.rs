use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpcsError {
    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("line coefficients a and b are both zero")]
    DegenerateLine,

    #[error("degenerate cluster: all {size} points are identical")]
    DegenerateCluster { size: usize },

    #[error("need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("sample has no line-membership labels")]
    MissingLabels,

    #[error("component {component} is missing standardized moment ({c},{d})")]
    MissingMoments { component: usize, c: u32, d: u32 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("cluster {cluster} has a singular covariance matrix")]
    SingularCovariance { cluster: usize },

    #[error("cluster {cluster} has {size} points; at least 3 are required")]
    ClusterTooSmall { cluster: usize, size: usize },

    #[error("no K in 1..={k_max} admits a valid AIC")]
    NoFeasibleK { k_max: usize },

    #[error("unknown built-in setting {0}; valid ids are 1..=8")]
    UnknownSetting(u32),

    #[error("invalid mixture spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{dropped} of {total} bootstrap replicates failed")]
    TooManyFailures { dropped: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, GpcsError>;
