use thiserror::Error;

/// Errors produced by the physics layers and the scenario runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular parameters: {0}")]
    SingularParameters(String),

    /// Success probability is identically zero; no entangled pair is ever heralded.
    #[error("no entanglement: {0}")]
    NoEntanglement(String),

    /// A fidelity dropped below zero after penalty subtraction. Clamping is
    /// forbidden; the parameters are simply outside the model's validity.
    #[error("infeasible parameters: {0}")]
    InfeasibleParameters(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("pathological parameters: {0}")]
    PathologicalParameters(String),

    #[error("no fixed point after {iterations} iterations (residual {residual:.3e})")]
    NoFixedPoint { iterations: usize, residual: f64 },

    /// The asymptote iteration alternates between two accumulation points
    /// instead of settling.
    #[error("asymptote oscillates between fidelities {low:.12} and {high:.12}")]
    AsymptoteOscillation { low: f64, high: f64 },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
