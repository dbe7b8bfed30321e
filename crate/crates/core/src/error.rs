use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid volume: {0}")]
    InvalidVolume(String),
    #[error("shape is empty: the volume is constant")]
    EmptyShape,
    #[error("support radius must be positive, got {0}")]
    DegenerateRadius(f64),
    #[error("binary volume has an empty {0} phase")]
    EmptyPhase(&'static str),
    #[error("matrix is not orthogonal (deviation {0:e})")]
    NotOrthogonal(f64),
    #[error("transforms lie in different components of O(3)")]
    ComponentMismatch,
    #[error("net would hold {projected} elements, above the cap of {cap}; use a larger delta or truncation")]
    ExcessiveNetSize { projected: u128, cap: u128 },
    #[error("no active transform left in the net")]
    EmptyNet,
    #[error("no n-fold rotation passes along this axis")]
    NoFold,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mesh is not watertight: {0} boundary or non-manifold edges")]
    NotWatertight(usize),
    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),
    #[error("point lies outside the grid")]
    OutOfGrid,
    #[error("format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
