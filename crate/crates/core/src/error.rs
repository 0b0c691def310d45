use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("truncation nmax = {0} is below the minimum of 3")]
    TruncationTooSmall(usize),

    #[error("Fock index {n} exceeds truncation nmax = {nmax}")]
    FockIndexOutOfRange { n: usize, nmax: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("cannot tensor objects of different kinds ({0} with {1})")]
    MixedKinds(&'static str, &'static str),

    #[error("invalid mode index {index} for a {modes}-mode object")]
    InvalidMode { index: usize, modes: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no photons to subtract: Tr[a^k rho a^k+] = {weight:e}")]
    NoPhotonsToSubtract { weight: f64 },

    #[error("vanishing denominator in normalized off-diagonal element ({0:e})")]
    VanishingDenominator(f64),

    #[error("reference state must be orthogonal to vacuum (|<0|phi>| = {0:e})")]
    NotOrthogonalToVacuum(f64),

    #[error("position projection annihilates the state (weight {0:e})")]
    ProjectionAnnihilates(f64),

    #[error("least-squares fit is rank deficient: {0}")]
    RankDeficient(String),

    #[error("one-dimensional minimization did not converge: {0}")]
    NoConvergence(String),

    #[error("degenerate heralding target: {0}")]
    DegenerateTarget(String),

    #[error("heralding never fires: p_success = {0:e}")]
    NoCoincidence(f64),

    #[error("optimization failed: best fidelity {best_fidelity:.6} below 0.5")]
    OptimizationFailed {
        best_fidelity: f64,
        best: Box<crate::herald::HeraldConfig>,
    },

    #[error("likelihood decreased at iteration {iteration} ({before:.12e} -> {after:.12e})")]
    LikelihoodDecrease {
        iteration: usize,
        before: f64,
        after: f64,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
