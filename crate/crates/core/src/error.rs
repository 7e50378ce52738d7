use alloc::string::String;

/// Errors raised by the simulator core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid channel spec: {0}")]
    InvalidSpec(String),
    #[error("degenerate channel spec: coupling matrix sums to zero")]
    DegenerateSpec,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("invalid tree-code spec: {0}")]
    InvalidTreeCode(String),
    #[error("codebook of {requested} bytes exceeds the memory budget of {budget} bytes")]
    ResourceBudget { requested: usize, budget: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("singular rank-one update (denominator {denominator:e})")]
    SingularUpdate { denominator: f64 },
    #[error("tree decoder overflow: {paths} surviving paths at stage {stage}")]
    DecoderOverflow { stage: usize, paths: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid_param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
