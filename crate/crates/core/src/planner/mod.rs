//! Dual-arm trajectory planning by direct collocation, plus the per-tick
//! tracking adjustment that applies force and alignment corrections.

mod arm;
mod collocation;
mod tracking;

pub use arm::{pad_frame_at_zero_pitch, rot_x, wrap_angle, ArmModel, JointVector, PadPose, Side};
pub use collocation::{
    certify, min_clearance, plan_trajectory, segment_rect_distance, spatial_pad_pose,
    CertificationReport, ObstacleBox, PlanReport, PlannerConfig, Trajectory,
};
pub use tracking::{
    interpolate_segment, run_tracking, segment_force_reference, tracking_step, PadLoads,
    TrackingCommand, TrackingResult,
};
