use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    /// Triangles whose three vertices all lie on the boundary.
    #[error("{} triangle(s) have no interior vertex: {:?}", triangles.len(), triangles)]
    NoInteriorVertex { triangles: Vec<usize> },

    #[error("boundary vertex {0} has no interior edge-neighbour to distribute onto")]
    IsolatedBoundaryVertex(usize),

    #[error("invalid multiplier weighting: {0}")]
    InvalidWeighting(String),

    #[error("plate thickness must lie in (0, 1), got {0}")]
    InvalidThickness(f64),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("operation requires the {required} multiplier kind")]
    UnsupportedKind { required: &'static str },

    #[error("zero diagonal entry in the multiplier Gram matrix at row {0}")]
    ZeroDualDiagonal(usize),

    #[error("discrete inf-sup constant {beta:.3e} at h = {h:.3e} signals loss of stability")]
    StabilityFailure { beta: f64, h: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
