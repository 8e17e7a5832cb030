//! Error type shared across the protocol engines.

/// Failure modes surfaced by protocol operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("insufficient funds: {0}")]
    InsufficientFunds(String),
    #[error("unknown account: {0}")]
    UnknownAccount(String),
    #[error("unauthorized minter for asset {0}")]
    UnauthorizedMinter(String),
    #[error("insufficient margin capacity: {0}")]
    InsufficientMargin(String),
    #[error("price {0} not on tick grid {1}")]
    BadTick(String, String),
    #[error("quantity {0} not on lot grid {1}")]
    BadLot(String, String),
    #[error("unknown order: {0}")]
    UnknownOrder(u64),
    #[error("order {0} not owned by caller")]
    NotOwner(u64),
    #[error("leverage exceeded: {0}")]
    LeverageExceeded(String),
    #[error("index price is stale (age {age} > bound {bound})")]
    StaleIndex { age: u64, bound: u64 },
    #[error("no index price available for step {0}")]
    MissingIndex(u64),
    #[error("no venue data with positive volume")]
    NoVenueData,
    #[error("insufficient eligible reporters: have {have}, need {need}")]
    InsufficientReporters { have: usize, need: usize },
    #[error("wrong spread regime: {0}")]
    WrongRegime(String),
    #[error("insufficient capital: {0}")]
    InsufficientCapital(String),
    #[error("insufficient tokens: {0}")]
    InsufficientTokens(String),
    #[error("no liquidity for conversion")]
    NoLiquidity,
    #[error("conversion amount below minimum: {0}")]
    BelowMinimum(String),
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
