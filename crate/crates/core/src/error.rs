use thiserror::Error;

/// Library-wide error type. Each variant corresponds to one contract
/// violation; [`Error::code`] gives the stable machine-readable name.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("table has no slots")]
    EmptyTable,
    #[error("table contains free-slot markers")]
    HasTombstones,
    #[error("table has no live nodes")]
    NoLiveNodes,
    #[error("key width {0} is not a positive multiple of 8 bits")]
    WidthNotByteAligned(u64),
    #[error("node {0:?} is already present")]
    DuplicateNode(String),
    #[error("node {0:?} not found")]
    NodeNotFound(String),
    #[error("parse error at {position}: {detail}")]
    Parse { position: String, detail: String },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("collision attempts exhausted while placing {0:?}")]
    PointSpaceExhausted(String),
    #[error("ring has no points")]
    EmptyRing,
    #[error("cycle search budget exceeded")]
    BudgetExceeded,
    #[error("unsupported node-set size {0} for cycle construction")]
    UnsupportedSize(usize),
    #[error("no surviving nodes")]
    NoSurvivors,
    #[error("exact enumeration is capped at {cap} slots, table has {actual}")]
    RangeTooLarge { cap: usize, actual: usize },
    #[error("tables use different insertion strategies")]
    StrategyMismatch,
    #[error("node label must be non-empty")]
    EmptyNodeLabel,
    #[error("key value does not fit in the declared {bits} source bits")]
    KeyExceedsWidth { bits: u64 },
}

impl Error {
    /// Stable error code, used verbatim in the CLI's error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyTable => "EMPTY_TABLE",
            Error::HasTombstones => "HAS_TOMBSTONES",
            Error::NoLiveNodes => "NO_LIVE_NODES",
            Error::WidthNotByteAligned(_) => "WIDTH_NOT_BYTE_ALIGNED",
            Error::DuplicateNode(_) => "DUPLICATE_NODE",
            Error::NodeNotFound(_) => "NODE_NOT_FOUND",
            Error::Parse { .. } => "PARSE_ERROR",
            Error::InvariantViolation(_) => "INVARIANT_VIOLATION",
            Error::PointSpaceExhausted(_) => "POINT_SPACE_EXHAUSTED",
            Error::EmptyRing => "EMPTY_RING",
            Error::BudgetExceeded => "BUDGET_EXCEEDED",
            Error::UnsupportedSize(_) => "UNSUPPORTED_SIZE",
            Error::NoSurvivors => "NO_SURVIVORS",
            Error::RangeTooLarge { .. } => "RANGE_TOO_LARGE",
            Error::StrategyMismatch => "STRATEGY_MISMATCH",
            Error::EmptyNodeLabel => "EMPTY_NODE_LABEL",
            Error::KeyExceedsWidth { .. } => "KEY_EXCEEDS_WIDTH",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
