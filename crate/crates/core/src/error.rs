use thiserror::Error;

/// Errors raised by the modelling, estimation and imaging routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("location ({x}, {y}) coincides with antenna {antenna}")]
    CoincidentLocation { antenna: usize, x: f64, y: f64 },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("spatial grid has no points")]
    EmptyGrid,

    #[error("no grid points outside the main lobe region")]
    EmptySidelobeRegion,

    #[error("effective Fisher information is singular (condition number {condition:e})")]
    SingularFim { condition: f64 },

    #[error("template signal vanishes at antenna {antenna}, subcarrier {subcarrier}")]
    ZeroTemplate { antenna: usize, subcarrier: usize },

    #[error("line-of-sight value of antenna {0} is zero")]
    ZeroLosValue(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed table: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(expected: &[usize], found: &[usize]) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_vec(),
            found: found.to_vec(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
