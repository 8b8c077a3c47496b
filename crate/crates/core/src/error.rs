use thiserror::Error;

/// Errors produced by the numerical engines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("integer matrix is not unimodular (det = {0})")]
    NotUnimodular(i64),

    #[error("invalid frequency data: {0}")]
    InvalidFrequency(String),

    #[error("singular counterterm: mean quadratic coefficient {0:e} vanishes while the mean linear term does not")]
    SingularCounterterm(f64),

    #[error("degenerate twist: 1 + 2<f2> = {0:e}")]
    DegenerateTwist(f64),

    #[error("Lie series did not converge after {terms} terms (last term norm {last_norm:e})")]
    LieSeriesDivergence { terms: usize, last_norm: f64 },

    #[error("elimination failed after {iterations} iterations (non-resonant norm {residual:e})")]
    EliminationFailure { iterations: usize, residual: f64 },

    #[error("potential contains a resonant mode (omega . nu = 0)")]
    ResonantMode,

    #[error("cohomological equation not solvable: right-hand side has mean {0:e}")]
    Solvability(f64),

    #[error("torus degenerate: min |l| = {0:e}")]
    TorusDegenerate(f64),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("integrator step size underflow at t = {0}")]
    StepUnderflow(f64),

    #[error("ODE integration failed: {0}")]
    Integration(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("bisection bracket invalid: {0}")]
    Bracket(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
