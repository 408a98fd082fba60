use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("configuration is not one-hot in parameter block `{parameter}`")]
    Decode { parameter: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("configuration space has {count} points, above the enumeration cap of {cap}")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("training diverged at epoch {epoch}: non-finite objective (learning rate too large?)")]
    Divergence { epoch: usize },

    #[error("clustering error: {0}")]
    Clustering(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("the feasible configuration set is empty")]
    EmptyFeasibleSet,

    #[error("model is incompatible with the requested formulation: {0}")]
    Incompatible(String),
}
