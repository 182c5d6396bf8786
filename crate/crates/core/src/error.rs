use thiserror::Error;

/// Errors reported by mesh construction, kernel evaluation and the solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node index {index} out of range for {what}")]
    IndexOutOfRange { what: &'static str, index: usize },

    #[error("theta = {0} is outside the stability region theta <= 1/4")]
    ThetaOutOfRange(f64),

    #[error("degenerate convolution kernel: |mu| = {0} is not strictly inside (-1, 1)")]
    DegenerateKernel(f64),

    #[error("kernel asymptotics invalid: 1 - |mu| = {0:.3e} is too small")]
    AsymptoticsInvalid(f64),

    #[error("argument branch window violated: Delta_theta = {delta} for theta = {theta}")]
    BranchWindow { theta: f64, delta: f64 },

    #[error("kernel table of length {len} is too short for level {needed}")]
    KernelTableTooShort { len: usize, needed: usize },

    #[error("convolution history of length {len} is too short for level {needed}")]
    HistoryTooShort { len: usize, needed: usize },

    #[error("zero pivot in tridiagonal elimination at row {0}")]
    ZeroPivot(usize),

    #[error("tridiagonal solve produced a non-finite value at row {0}")]
    NonFiniteSolution(usize),

    #[error("tridiagonal solve residual {residual:.3e} exceeds {limit:.3e} at level {level}")]
    ResidualTooLarge {
        residual: f64,
        limit: f64,
        level: usize,
    },

    #[error("meshes do not match: {0}")]
    MeshMismatch(String),

    #[error("trajectory is missing a stored field at level {0}")]
    MissingField(usize),

    #[error("zero denominator in convergence ratio at refinement step {0}")]
    ZeroRatioDenominator(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
