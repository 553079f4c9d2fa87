use crate::covariance::TsvdFailure;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid needs at least 3 longitudes and 3 latitudes, got {nlon}x{nlat}")]
    GridTooSmall { nlon: usize, nlat: usize },

    #[error("stencil p={p}, q={q} needs nlon >= {} and nlat >= {}, grid is {nlon}x{nlat}", 2 * p + 1, 2 * q + 1)]
    StencilTooWide { p: usize, q: usize, nlon: usize, nlat: usize },

    #[error("invalid model parameter: {0}")]
    InvalidParams(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("length mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown observation problem {0} (expected 1..=4)")]
    UnknownProblem(u8),

    #[error("invalid assimilation window: {0}")]
    InvalidWindow(String),

    #[error("invalid assimilation setup: {0}")]
    InvalidSetup(String),

    #[error("invalid domain decomposition: {0}")]
    Decomposition(String),

    #[error(transparent)]
    Tsvd(#[from] TsvdFailure),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
