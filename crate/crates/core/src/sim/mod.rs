//! Kinematic simulation of two compliant pads gripping a rigid box.

mod body;
mod dataset;
mod oracle;
mod pad;
mod scenario;
mod simulator;

pub use body::{gravity_wrench, BoxObject, BoxPose, MAX_FACE_TILT_RAD};
pub use dataset::{cop_pairs, synthetic_calibration_dataset, CalibrationSample};
pub use oracle::{slip_oracle, SlipOracle, SlipStatus};
pub use pad::{
    contact_resolve, misalignment, synth_readings, CompliantPad, ContactResolution,
    SensorDistortion, SynthReadings, MAX_SQUEEZE_M,
};
pub use scenario::{ControllerMode, GraspSetup, Motion, ReferenceMode, Scenario, SlipIncrements};
pub use simulator::{
    run_experiment, SimTrace, Simulator, Summary, TraceRow, TraceStats, PHASE_CARRY, PHASE_GRIP,
};
