use thiserror::Error;

/// Errors raised by the sensing, contact, control, planning and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GripError {
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("center of pressure undefined: total sensor force is zero")]
    UndefinedCop,

    #[error("rank deficient fit: {0}")]
    Rank(String),

    #[error("quadrature did not converge: relative change {rel_change:.3e} on refinement")]
    Accuracy { rel_change: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("planner failed: {0}")]
    Planner(String),

    #[error("simulation integrity violated: {0}")]
    SimulationIntegrity(String),
}

pub type Result<T> = std::result::Result<T, GripError>;
