use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    #[error("grid size must be a power of two >= 8, got {0}")]
    BadGridSize(usize),
    #[error("grid length must be positive, got {0}")]
    BadGridLength(f64),
    #[error("{context}: non-finite value encountered")]
    NonFinite { context: String },
    #[error("trajectory {seed_index} became non-finite at t = {time}")]
    TrajectoryBlowup { seed_index: usize, time: f64 },
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error("classical flow reached a caustic (jacobian {jac} at t = {time})")]
    CausticReached { time: f64, jac: f64 },
    #[error("flow inversion failed at t = {time}, x = {x}: {reason}")]
    InversionFailed { time: f64, x: f64, reason: String },
    #[error("stationary point near y = {y} is degenerate (|g'| = {slope}); point lies too close to the caustic set")]
    DegenerateStationaryPoint { y: f64, slope: f64 },
    #[error("oscillatory quadrature under-resolved: {points_per_period:.1} points per period < 10")]
    UnresolvedOscillation { points_per_period: f64 },
    #[error("density is below the node floor on every grid node")]
    AllNodesUnderFloor,
    #[error("trajectory bundles have mismatched meshes: {0}")]
    MismatchedMesh(String),
    #[error("{0}")]
    Invalid(String),
}
