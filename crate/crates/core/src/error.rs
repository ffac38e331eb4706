use thiserror::Error;

/// Every failure the toolkit reports.
///
/// Variants split into two families: input validation (bad descriptions,
/// out-of-range parameters) and numerical failures (resonance guards,
/// rank deficiencies, non-convergence). The CLI maps them to exit codes
/// 2 and 3 respectively.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("condition at vertex {vertex:?} has rank {rank} < {expected}")]
    RankDeficient {
        vertex: Option<usize>,
        rank: usize,
        expected: usize,
    },

    #[error("resonance proximity: {0}")]
    Resonance(String),

    #[error("contour passes too close to a zero: {0}")]
    ContourHit(String),

    #[error("not a threshold matrix: {0}")]
    NotThreshold(String),

    #[error("extrapolation did not converge (residual {residual:.3e})")]
    Extrapolation { residual: f64 },

    #[error("classification refused: {0}")]
    Classification(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::Resonance(_)
                | Error::ContourHit(_)
                | Error::NotThreshold(_)
                | Error::Extrapolation { .. }
                | Error::Classification(_)
                | Error::Numerical(_)
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Invalid(_) => "invalid",
            Error::Schema(_) => "schema",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::Resonance(_) => "resonance",
            Error::ContourHit(_) => "contour_hit",
            Error::NotThreshold(_) => "not_threshold",
            Error::Extrapolation { .. } => "extrapolation",
            Error::Classification(_) => "classification",
            Error::Numerical(_) => "numerical",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
