use thiserror::Error;

/// Errors across the library surface.
#[derive(Debug, Error)]
pub enum WdlError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{x} is not a unit modulo {modulus}")]
    NotAUnit { x: u64, modulus: u64 },
    #[error("zero has no unit part")]
    ZeroHasNoUnitPart,
    #[error("ambient rank mismatch: {0} vs {1}")]
    AmbientMismatch(usize, usize),
    #[error("lattice inclusion fails: generator {0} is not p-locally in the target span")]
    NotContained(usize),
    #[error("quotient has infinite length: ranks {0} and {1} differ")]
    RankMismatch(usize, usize),
    #[error("denominator of a generator entry is divisible by p = {0}")]
    NonLocalDenominator(u64),
    #[error("algebra is not admissible: {0}")]
    Inadmissible(String),
    #[error("augmentation index {index} out of range (r = {r})")]
    AugmentationOutOfRange { index: usize, r: usize },
    #[error("lambda-rank of R not 1 at this augmentation (rank {0})")]
    AnnihilatorRankNotOne(usize),
    #[error("lambda-rank zero at this augmentation")]
    LambdaRankZero,
    #[error("congruence determinant vanishes; module data is degenerate")]
    ZeroCongruenceDeterminant,
    #[error("invalid module data: {0}")]
    InvalidModule(String),
    #[error("invalid deformation point: {0}")]
    InvalidPoint(String),
    #[error("matrix precondition violated: {0}")]
    CharPolyPrecondition(String),
    #[error("singular Weierstrass equation (discriminant 0)")]
    SingularCurve,
    #[error("bad reduction at {0}")]
    BadReduction(u64),
    #[error("reduction at {0} is not multiplicative")]
    NotMultiplicative(u64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("internal error: {0}")]
    Internal(String),
}
