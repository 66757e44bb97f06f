use thiserror::Error;

pub type Result<T> = std::result::Result<T, FrameError>;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("exponent {value} outside the admissible range {range}")]
    InvalidExponent { value: f64, range: &'static str },

    #[error("grid level {level} expects {expected} coefficients, got {found}")]
    CoefficientCount {
        level: u32,
        expected: usize,
        found: usize,
    },

    #[error("grid level {0} exceeds the supported maximum")]
    LevelTooLarge(u32),

    #[error("cannot refine from level {from} down to level {to}")]
    CoarsenRefused { from: u32, to: u32 },

    #[error("invalid sequence entries: {0}")]
    InvalidSequence(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid window [{lo}, {hi}]: {reason}")]
    InvalidWindow { lo: i64, hi: i64, reason: String },

    #[error("point {0} lies outside [0, 1]")]
    PointOutOfRange(f64),

    #[error("rank must be at least 1")]
    RankZero,

    #[error("rank {rank} exceeds the representable limit {limit} of frame {label}")]
    RankOutOfRange {
        rank: usize,
        limit: usize,
        label: String,
    },

    #[error("element of kind {found} does not belong to {expected}")]
    SpaceMismatch { expected: String, found: String },

    #[error("not representable: {0}")]
    NotRepresentable(String),

    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    #[error("invalid frame label {label:?}: {reason}")]
    InvalidLabel { label: String, reason: String },

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
