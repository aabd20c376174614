//! Mapping from failures to the process exit-code contract.

use std::fmt;

use grip_core::GripError;

pub const INPUT: u8 = 2;
pub const NUMERICAL: u8 = 3;
pub const INTEGRITY: u8 = 4;

/// Malformed or unreadable user input.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

/// A fit or solve that ran but produced no usable answer.
#[derive(Debug)]
pub struct NumericalError(pub String);

impl fmt::Display for NumericalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalError {}

pub fn input(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

pub fn numerical(msg: impl Into<String>) -> anyhow::Error {
    NumericalError(msg.into()).into()
}

fn grip_code(e: &GripError) -> u8 {
    match e {
        GripError::SimulationIntegrity(_) => INTEGRITY,
        GripError::InvalidMeasurement(_) | GripError::InvalidParameter(_) => INPUT,
        GripError::UndefinedCop
        | GripError::Rank(_)
        | GripError::Accuracy { .. }
        | GripError::Infeasible(_)
        | GripError::Planner(_) => NUMERICAL,
    }
}

/// The first classified cause in the chain decides; anything else is a plain failure.
pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<InputError>() {
            return INPUT;
        }
        if cause.is::<NumericalError>() {
            return NUMERICAL;
        }
        if let Some(g) = cause.downcast_ref::<GripError>() {
            return grip_code(g);
        }
        if cause.is::<serde_json::Error>() || cause.is::<csv::Error>() {
            return INPUT;
        }
    }
    1
}
