use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("generator index {index} outside 1..={rank}")]
    GeneratorOutOfRange { index: i64, rank: u32 },

    #[error("words from trees of different order ({left} vs {right})")]
    OrderMismatch { left: u32, right: u32 },

    #[error("ball of radius {radius} needs {} vertices, cap is {cap}", needed.map_or("too many".to_string(), |n| n.to_string()))]
    VertexCapExceeded {
        radius: usize,
        needed: Option<usize>,
        cap: usize,
    },

    #[error("subset A_{position} is empty")]
    EmptySubset { position: usize },

    #[error("generator masks have rank {rank} over GF(2), need {m}; the intersection has index below 2^{m}")]
    NonSpanningSpec { rank: usize, m: usize },

    #[error("invalid generator pair ({i}, {j}) for order {order}")]
    InvalidPair { i: u32, j: u32, order: u32 },

    #[error("p = {0} outside the supported range [1.1, 10]")]
    POutOfRange(f64),

    #[error("{0} and {1} are not adjacent")]
    NotAdjacent(String, String),

    #[error("no value for vertex {0}")]
    MissingValue(String),

    #[error("no convergence after {iterations} sweeps (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("combination members do not share one resistance sequence")]
    MixedSequences,

    #[error("invalid resistance sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid resistance: {0}")]
    InvalidResistance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
