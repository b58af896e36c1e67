use thiserror::Error;

/// Errors produced by grid construction, field operations and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite values in {0}")]
    NonFinite(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("coupling integral vanishes; no Nehari projection exists")]
    NoProjection,

    #[error("coupling integral degenerated during minimization")]
    DegenerateIterate,

    #[error("exponents outside the ground-state window: {0}")]
    OutsideTheoremRange(String),

    #[error("gamma must be > 1 for the instability construction, got {0}")]
    InvalidGamma(f64),

    #[error("auxiliary parameters not applicable: {0}")]
    AuxInapplicable(String),

    #[error("blow-up time bound not applicable: {0}")]
    BoundInapplicable(String),

    #[error("trajectory has {0} samples; certification needs at least 10")]
    TooFewSamples(usize),

    #[error("trajectory terminated as unstable; excluded from certification")]
    UnstableTrajectory,

    #[error("invalid integrator config: {0}")]
    InvalidConfig(String),

    #[error("snapshot format: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
