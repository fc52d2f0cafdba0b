use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// The evaluation point is too close to a zero of the wave function for the
/// polar decomposition (and hence the guidance velocity) to be stable.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("|psi|^2 = {density:e} is below the node threshold {threshold:e}")]
pub struct NodeProximity {
    pub density: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    NodeProximity(#[from] NodeProximity),

    #[error("sampling window holds only {mass:.9} of the probability mass (need at least {required:.9})")]
    WindowTooSmall { mass: f64, required: f64 },

    #[error("{aborted} of {total} trajectories aborted near nodes")]
    ExcessNodeAborts { aborted: usize, total: usize },

    #[error("{unresolved} of {total} trajectories ended outside every channel")]
    UnresolvedExcess { unresolved: usize, total: usize },

    #[error("{failed} of {total} trajectories exceeded the step limit")]
    StepLimitExceeded { failed: usize, total: usize },

    #[error("j0 at t0 reaches {min_j0:e} at x = {x}, below -{tolerance:e}")]
    PreconditionViolated { min_j0: f64, x: f64, tolerance: f64 },

    #[error("scenario search found no candidate in {attempts} attempts")]
    SearchExhausted { attempts: usize },
}
