use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid card text {0:?}")]
    BadCard(String),
    #[error("duplicate card in {0}")]
    DuplicateCard(&'static str),
    #[error("node is terminal")]
    TerminalNode,
    #[error("action {0:?} is not legal here")]
    IllegalAction(crate::game::Action),
    #[error("phase {0} out of range (1..={1})")]
    BadPhase(u8, u8),
    #[error("recall depth {k} invalid at phase {phase}")]
    BadRecall { phase: u8, k: u8 },
    #[error("malformed observation: {0}")]
    BadObservation(&'static str),
    #[error("index {0} out of range for phase {1}")]
    BadIndex(usize, u8),
    #[error("histogram dimension {got}, expected {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("negative mass {0} in histogram")]
    NegativeMass(f64),
    #[error("class labeling has a gap: no label for class {0}")]
    LabelGap(usize),
    #[error("feature shape mismatch: {0}")]
    ShapeMismatch(&'static str),
    #[error("requested {k} clusters but only {distinct} distinct points")]
    TooManyClusters { k: usize, distinct: usize },
    #[error("bucket count {m} exceeds {what} count {available} at phase {phase}")]
    BucketsTooLarge {
        m: usize,
        available: usize,
        what: &'static str,
        phase: u8,
    },
    #[error("invalid weights: {0}")]
    BadWeights(&'static str),
    #[error("file {path}: {what}")]
    FileFormat { path: String, what: String },
    #[error("hash mismatch for {what}: file has {found:#018x}, current build expects {expected:#018x}")]
    HashMismatch {
        what: &'static str,
        found: u64,
        expected: u64,
    },
    #[error("abstraction map does not cover phase {0}")]
    MapPhaseMissing(u8),
    #[error("config error: {0}")]
    Config(String),
    #[error("expected counts mismatch: {0}")]
    CountMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
