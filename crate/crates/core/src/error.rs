use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("malformed ordinal: {0}")]
    MalformedOrdinal(String),

    #[error("not a limit ordinal: {0}")]
    NotLimit(String),

    #[error("splice requires lower first argument (heights {lower} and {upper})")]
    SpliceOrder { lower: String, upper: String },

    #[error("level {level} is beyond truncation {bound}")]
    BeyondTruncation { level: String, bound: String },

    #[error("invalid node: {0}")]
    InvalidNode(String),

    #[error("invalid arena: {0}")]
    InvalidArena(String),

    #[error("arity mismatch: expected {expected} nodes, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("block is not enumerated in height order at position {0}")]
    NotHeightSorted(usize),

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("family {0} is not a delta-system")]
    NotDeltaSystem(usize),

    #[error("block escapes the ground set: {0}")]
    BlockEscapesGround(String),

    #[error("block rank {rank} is not below {bound}")]
    RankOutOfRange { rank: String, bound: String },

    #[error("block is not a member of the family")]
    BlockNotInFamily,

    #[error("incompatible extension on key {0}")]
    IncompatibleExtension(String),

    #[error("block excluded by p (key {0} assigned 0)")]
    BlockExcluded(String),

    #[error("dense request {index} cannot be met: {reason}")]
    RequestFailed { index: usize, reason: String },

    #[error("closure bound of size {size} exceeds horizon {horizon}")]
    HorizonExceeded { size: usize, horizon: usize },

    #[error("element {0} lies outside the bijection domain")]
    OutsideBijection(String),

    #[error(
        "insufficient rungs at level {level}: steps {steps} < required {required} \
         (nodes {nodes}, families {families}, data rungs {data_rungs})"
    )]
    InsufficientRungs {
        level: String,
        steps: usize,
        required: usize,
        nodes: usize,
        families: usize,
        data_rungs: usize,
    },

    #[error("level not built: {0}")]
    LevelNotBuilt(String),

    #[error("wrong level order: {0}")]
    WrongLevelOrder(String),

    #[error("catalog differs from the one already used for this coloring")]
    CatalogChanged,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("nodes are incomparable")]
    Incomparable,

    #[error("foreign block: {0}")]
    ForeignBlock(String),

    #[error("malformed instance: {0}")]
    MalformedInstance(String),

    #[error("branch leaves arena: {0}")]
    BranchOutsideArena(String),
}
