use thiserror::Error;

/// Every failure the engine can report.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NapError {
    #[error("universe bound {bound} is below the minimum {minimum} for {mode} mode")]
    BoundTooSmall {
        mode: &'static str,
        bound: u32,
        minimum: u32,
    },
    #[error("operation `{op}` is not available for this value or universe mode")]
    WrongMode { op: &'static str },
    #[error("values from different universe modes were mixed in one query")]
    MixedModes,
    #[error("snapshot is empty")]
    EmptySnapshot,
    #[error("conditioning event has no state in the snapshot")]
    ConditionNull,
    #[error("division by a germ that evaluates to zero on the snapshot")]
    DivisionUndefined,
    #[error("search budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("class `{class}` could not supply {needed} fresh element(s)")]
    EnumerationExhausted { class: String, needed: usize },
    #[error("no separating marker in `{of}` outside `{outside}`")]
    MarkerMissing { of: String, outside: String },
    #[error("interval closure added {value}, which lies in the avoided class `{class}`")]
    IsolationViolated { value: String, class: String },
    #[error("filter base has no subset bound for window {0}")]
    MissingSubsetBound(String),
    #[error("pair ({small}, {large}) violates the tier hypothesis: {reason}")]
    TierOrder {
        small: String,
        large: String,
        reason: String,
    },
    #[error("random variable is not a bijection: {0}")]
    NotBijective(String),
    #[error("invalid tier configuration: {0}")]
    InvalidTiers(String),
    #[error("window error: {0}")]
    Window(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

pub type Result<T, E = NapError> = std::result::Result<T, E>;
