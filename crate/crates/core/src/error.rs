use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("player count {n} outside 1..={cap}")]
    InvalidPlayerCount { n: usize, cap: usize },
    #[error("coalition {bits:#b} has players beyond n = {n}")]
    CoalitionOutOfRange { bits: u64, n: usize },
    #[error("player {player} outside 1..={n}")]
    PlayerOutOfRange { player: usize, n: usize },
    #[error("coalition size {size} outside 0..={n}")]
    SizeOutOfRange { size: usize, n: usize },
    #[error("malformed coalition bitstring {0:?}")]
    BadBitstring(String),
    #[error("binomial argument {0} exceeds 64")]
    BinomialTooLarge(u64),
    #[error("Bernoulli index {0} exceeds 64")]
    BernoulliTooLarge(usize),
    #[error("gamma coefficient needs 0 <= r <= s, got r = {r}, s = {s}")]
    GammaArgs { r: usize, s: usize },
    #[error("additivity degree {k} outside 1..={n}")]
    InvalidDegree { k: usize, n: usize },
    #[error("{0}")]
    InvalidGame(String),
    #[error("incomplete table: {0}")]
    IncompleteTable(String),
    #[error("non-finite value {value} for coalition {bits:#b}")]
    NonFinite { bits: u64, value: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("game evaluation failed: {0}")]
    Evaluation(String),
    #[error("budget {budget} below the minimum {min}")]
    BudgetTooSmall { budget: usize, min: usize },
    #[error("budget {budget} exceeds the {max} available coalitions")]
    BudgetTooLarge { budget: usize, max: u64 },
    #[error("sampling distribution exhausted")]
    Exhausted,
    #[error("solver: {0}")]
    Solver(String),
    #[error("invalid data: {0}")]
    Data(String),
}
