use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// The open list grew past the configured cap.
    #[error("open list exceeded cap of {cap} nodes")]
    OpenListCap { cap: usize },

    /// The first dive ran out of budget before reaching a goal.
    #[error("sample not sealed: no goal reached within {nodes} generated nodes")]
    Unsealed { nodes: u64 },

    #[error("estimation error: {0}")]
    Estimation(String),

    /// A recorded incumbent is cheaper than the reference optimum.
    #[error("integrity error: incumbent cost {cost} is below the optimum {optimum}")]
    Integrity { cost: f64, optimum: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),
}
