use crate::rational::Rational;

/// Two contexts whose marginals on their common observables disagree.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct SignalingWitness {
    pub first: usize,
    pub second: usize,
    /// Shared observables, as scenario observable indices.
    pub overlap: Vec<usize>,
    pub first_marginal: Vec<Rational>,
    pub second_marginal: Vec<Rational>,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("observable `{0}` is not covered by any context")]
    CoverViolation(String),
    #[error("context {inner} is strictly contained in context {outer}")]
    ChainViolation { inner: usize, outer: usize },
    #[error("unknown observable label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("context {0} is empty")]
    EmptyContext(usize),
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("{what} too large: {size} exceeds limit {limit}")]
    TooLarge { what: &'static str, size: usize, limit: usize },
    #[error("observables {0:?} are not a subset of the domain")]
    NotASubset(Vec<String>),
    #[error("negative entry {value} in context {context}, section {section}")]
    NegativeEntry { context: usize, section: usize, value: Rational },
    #[error("context {context} sums to {sum}, not 1")]
    RowNotNormalized { context: usize, sum: Rational },
    #[error("signaling between contexts {} and {} on observables {:?}: {:?} vs {:?}",
        .0.first, .0.second, .0.overlap, .0.first_marginal, .0.second_marginal)]
    SignalingDetected(Box<SignalingWitness>),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("context {0} has empty support")]
    EmptySupport(usize),
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("{0} candidates exceed the enumeration limit")]
    TooManyCandidates(u128),
    #[error("input model is signaling")]
    SignalingInput(Box<SignalingWitness>),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),
    #[error("parity system is consistent; the resource is not strongly contextual")]
    ConsistentResource,
    #[error("parity test failed in round {round}; protocol aborted")]
    Aborted {
        round: usize,
        /// JSON-lines transcript up to and including the failing round.
        transcript: String,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
