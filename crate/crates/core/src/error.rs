use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge {{{0},{1}}} is not an edge of the graph")]
    InvalidEdge(usize, usize),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid walk: {0}")]
    InvalidWalk(String),

    #[error("invalid move: {0}")]
    InvalidMove(String),

    #[error("vertex budget {n} is too small (need at least {min})")]
    BudgetTooSmall { n: usize, min: usize },

    #[error("walk is not primitive")]
    NotPrimitive,

    #[error("weighted tree cannot be realised as a closed walk: {0}")]
    DegenerateTree(String),

    #[error("no admissible Graver element after {attempts} attempts")]
    Exhausted { attempts: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("instance too large: search exceeded {limit} nodes")]
    InstanceTooLarge { limit: u64 },

    #[error("maximum likelihood estimate is on the boundary at vertices {}", one_based(.vertices))]
    BoundaryMle { vertices: Vec<usize> },

    #[error("fitted edge probability is 0 or 1 on edge {{{0},{1}}}")]
    DegenerateProbability(usize, usize),

    #[error("statistic stream is empty")]
    EmptySamples,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn one_based(vertices: &[usize]) -> String {
    vertices
        .iter()
        .map(|v| (v + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}
