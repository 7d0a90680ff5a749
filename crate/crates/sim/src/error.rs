use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model {model} cannot represent {process}")]
    IncompatibleModel { model: String, process: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("size guard exceeded: {what} = {value} (limit {limit})")]
    SizeGuard {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error(transparent)]
    Core(#[from] freemeasures_core::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
