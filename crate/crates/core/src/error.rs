use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("singular matrix: pivot {pivot:e} at column {column} is below threshold {threshold:e}")]
    SingularMatrix { column: usize, pivot: f64, threshold: f64 },

    #[error("{what} did not converge after {steps} steps")]
    NonConvergence { what: &'static str, steps: usize },

    #[error("symbol has a pole at z = {re} + {im}i")]
    PoleAtEvaluationPoint { re: f64, im: f64 },

    #[error("invalid scaling r = {r}: need r > 1 and r * rho(A) < 1 (rho(A) = {rho_a})")]
    InvalidScaling { r: f64, rho_a: f64 },

    #[error("Riccati pivot R0 - gamma Q B is singular at iterate {iteration}")]
    PivotSingular { iteration: usize },

    #[error("Riccati iteration did not converge: {iterations} iterations, last step {step:e}")]
    RiccatiNonConvergence { iterations: usize, step: f64 },

    #[error("finite section of order {n} is singular")]
    SectionSingular { n: usize },

    #[error("Riccati solution is not stabilizing")]
    NotStabilizing,

    #[error(
        "symbol is singular on the unit circle (smallest singular value {min:e} at z = {re} + {im}i); \
         the operator is not Fredholm"
    )]
    ZeroOnCircle { min: f64, re: f64, im: f64 },

    #[error("invalid realization: {0}")]
    InvalidRealization(String),

    #[error("input error in field `{field}`: {message}")]
    Input { field: String, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
