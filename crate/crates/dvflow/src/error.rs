use thiserror::Error;

/// Error variants shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: {0} ({1}) vs {2} ({3})")]
    LengthMismatch(&'static str, usize, &'static str, usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("weight must be strictly positive, got {0}")]
    NonpositiveWeight(f64),

    #[error("exponent p must satisfy p >= {1}, got {0}")]
    InvalidExponent(f64, f64),

    #[error("discount rate must be strictly positive, got {0}")]
    InvalidDiscount(f64),

    #[error("time nodes must start at 0 and be strictly increasing")]
    InvalidTimeNodes,

    #[error("joint support too large for enumeration: {0} atoms (limit {1})")]
    SupportTooLarge(usize, usize),

    #[error("path horizon {0} does not match problem horizon {1}")]
    HorizonMismatch(f64, f64),

    #[error("time grids are incompatible: {0}")]
    GridMismatch(&'static str),

    #[error("need at least {0} nodes, got {1}")]
    TooFewNodes(usize, usize),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("no growth certificate declared for this check")]
    MissingCertificate,

    #[error(
        "discount validity gate failed: p (2p/delta)^p alpha = {margin:.6e} >= 1 \
         (p = {p}, delta = {delta}, alpha = {alpha}); the value may be unbounded below"
    )]
    ValidityGate {
        p: f64,
        delta: f64,
        alpha: f64,
        margin: f64,
    },

    #[error("requested split time {0} is not a grid node")]
    SplitOffGrid(f64),

    #[error("test field has no time profile; this check integrates in time")]
    MissingTimeProfile,

    #[error("transport solver exceeded its pivot budget")]
    TransportStalled,

    #[error("per-particle solve failed at atom {atom}: {source}")]
    AtomSolve {
        atom: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
