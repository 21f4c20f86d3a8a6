use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    Lattice(String),
    #[error("site ({x}, {y}) is outside the {m}x{m} lattice")]
    OutOfBounds { x: i64, y: i64, m: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("matrix of {rows} rows exceeds the dense cap of {cap}")]
    TooLarge { rows: usize, cap: usize },
    #[error("path error: {0}")]
    Path(String),
    #[error("distribution has zero total probability")]
    ZeroProbability,
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("exclusion: fermionic pair cannot occupy a single site twice")]
    Exclusion,
    #[error("operator is not unitary: eigenvalue modulus off by {0:e}")]
    NotUnitary(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
