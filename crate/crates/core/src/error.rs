use thiserror::Error;

/// Errors raised while validating model inputs or running the model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("loss probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("{name} must be at least 1, got {value}")]
    NonPositive { name: &'static str, value: u64 },

    #[error("timing must be finite and positive (t = {arrival_interval}s, timeout = {timeout}s)")]
    InvalidTiming { arrival_interval: f64, timeout: f64 },

    #[error("timeout {timeout}s is not an integral multiple of the arrival interval {arrival_interval}s")]
    NonIntegralRatio { arrival_interval: f64, timeout: f64 },

    #[error("timing implies m = {implied} but m = {given} was requested")]
    InconsistentTiming { implied: u32, given: u32 },

    #[error("closed form requires k = {expected}, got k = {actual}")]
    WrongMultiplier { expected: u32, actual: u32 },

    #[error("no closed form for k = {0}; use the numeric stationary solver")]
    NoClosedForm(u32),

    #[error("distribution does not match the state space of the parameters")]
    StateSpaceMismatch,

    #[error("linear system for the stationary distribution is singular")]
    SingularSystem,
}

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("outcome script exhausted after {consumed} attempts at observation {observation}")]
    ScriptExhausted { consumed: usize, observation: usize },

    #[error("loss vector of length {len} exhausted at attempt {attempt}")]
    VectorExhausted { len: usize, attempt: usize },

    #[error("loss vector is empty")]
    EmptyVector,

    #[error("cannot parse loss vector token {0:?}")]
    BadToken(String),
}
