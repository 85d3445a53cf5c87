use thiserror::Error;

pub type Result<T> = std::result::Result<T, SeamError>;

#[derive(Debug, Error)]
pub enum SeamError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid bandwidth: {0}")]
    InvalidBandwidth(String),

    #[error("kernel density estimate needs at least one point")]
    EmptySample,

    #[error("all kernel weights are zero")]
    ZeroWeights,

    #[error("density grids do not share a field grid")]
    GridMismatch,

    #[error("invalid mixing coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("no data for this matchup: direct, synthetic pitcher and synthetic batter are all empty")]
    InsufficientData,

    #[error("degenerate density: total mass {0:.4} is below 0.5")]
    DegenerateDensity(f64),

    #[error("unknown player `{0}`")]
    UnknownPlayer(String),

    #[error("unknown season {0}")]
    UnknownSeason(u16),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("corrupt cache: {0}")]
    CorruptCache(String),
}

impl SeamError {
    /// Stable machine-readable identifier for API error payloads.
    pub fn code(&self) -> &'static str {
        match self {
            SeamError::Io(_) => "io_error",
            SeamError::Csv(_) => "csv_error",
            SeamError::Json(_) => "json_error",
            SeamError::MissingColumn(_) => "missing_column",
            SeamError::InvalidGrid(_) => "invalid_grid",
            SeamError::InvalidBandwidth(_) => "invalid_bandwidth",
            SeamError::EmptySample => "empty_sample",
            SeamError::ZeroWeights => "zero_weights",
            SeamError::GridMismatch => "grid_mismatch",
            SeamError::InvalidCoefficients(_) => "invalid_coefficients",
            SeamError::InsufficientData => "insufficient_data",
            SeamError::DegenerateDensity(_) => "degenerate_density",
            SeamError::UnknownPlayer(_) => "unknown_player",
            SeamError::UnknownSeason(_) => "unknown_season",
            SeamError::InvalidArgument(_) => "invalid_argument",
            SeamError::CorruptCache(_) => "corrupt_cache",
        }
    }
}
