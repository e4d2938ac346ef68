use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UsdError {
    #[error("amplitude vector has zero norm")]
    ZeroVector,

    #[error("invalid state literal `{0}`")]
    InvalidStateLiteral(String),

    #[error("supplied Schmidt frame does not reproduce the state (residual {residual:.3e})")]
    InvalidSchmidtFrame { residual: f64 },

    #[error("priors must be non-negative and sum to 1")]
    InvalidPriors,

    #[error("both states are product states; use the no-communication classifier")]
    ProductState,

    #[error("the two states are identical")]
    IdenticalStates,

    #[error("no zero-error local scheme exists: {0}")]
    Infeasible(String),

    #[error("zero-error residual {residual:.3e} exceeds tolerance")]
    ResidualTooLarge { residual: f64 },

    #[error("same-basis constraint violated: {0}")]
    ConstraintViolated(String),

    #[error("angle {0} outside the allowed domain")]
    DomainError(f64),

    #[error("pair is not a one-state-detector case ({0})")]
    NotDetectorCase(String),

    #[error("invalid configuration: {0}")]
    ConfigError(String),
}
