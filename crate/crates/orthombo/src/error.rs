use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("determinant is exactly zero")]
    DegenerateDeterminant,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("field value at point {index} is not orthogonal (residual {residual:e})")]
    NotOrthogonal { index: usize, residual: f64 },
    #[error("winding loop under-resolved: angle step {step:.3} rad at index {index}")]
    UnderResolved { index: usize, step: f64 },
    #[error("plus region is empty or covers the domain; isoperimetric ratio undefined")]
    UndefinedRatio,
    #[error("point {0} lies outside the fundamental box [-pi, pi)^3")]
    OutOfBox(usize),
    #[error("{0} out of range")]
    OutOfRange(&'static str),
    #[error("direct summation too large: {0} terms")]
    TooLarge(u64),
    #[error("backend does not match the field layout")]
    BackendMismatch,
    #[error("configuration: {0}")]
    Config(String),
    #[error("snapshot format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
