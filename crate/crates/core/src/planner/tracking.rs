use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::arm::{ArmModel, JointVector, PadPose, Side};
use super::collocation::PlannerConfig;
use super::collocation::Trajectory;
use crate::contact::required_grip_force;
use crate::control::ControllerGains;
use crate::error::Result;
use crate::sim::{SimTrace, Simulator};

/// `m + 1` evenly spaced configurations from `q_k` to `q_k1`, both included.
pub fn interpolate_segment(q_k: &JointVector, q_k1: &JointVector, m: usize) -> Vec<JointVector> {
    let m = m.max(1);
    let mut out: Vec<JointVector> = (0..m)
        .map(|i| q_k + (q_k1 - q_k) * (i as f64 / m as f64))
        .collect();
    out.push(*q_k1);
    out
}

/// Per-pad gravity load `(f_g, τ_g)`.
pub type PadLoads = [(f64, f64); 2];

/// Upper-bound grip reference over a segment: the largest centred-CoP grip force
/// needed by either pad at any of the given poses.
pub fn segment_force_reference(loads: &[PadLoads], mu: f64, radius_m: f64) -> Result<f64> {
    let mut best: f64 = 0.0;
    for pose in loads {
        for (f_g, tau_g) in pose {
            best = best.max(required_grip_force(*f_g, *tau_g, mu, radius_m)?);
        }
    }
    Ok(best)
}

/// Accumulated corrections applied on top of a nominal configuration.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrackingCommand {
    /// Pad opening along y (m); each pad moves outward by this amount.
    pub separation_m: f64,
    pub pitch_left_rad: f64,
    pub pitch_right_rad: f64,
}

impl TrackingCommand {
    pub fn is_zero(&self) -> bool {
        self.separation_m == 0.0 && self.pitch_left_rad == 0.0 && self.pitch_right_rad == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingResult {
    pub q: JointVector,
    /// Pad pose error left after the solve (m or rad, max norm over both arms).
    pub residual: f64,
    /// A joint limit prevented an exact solution.
    pub saturated: bool,
}

/// Closest configuration to `q_nominal` whose pads are displaced by
/// `±separation` along y and pitched by the accumulated alignment corrections.
///
/// Each arm has as many joints as pose constraints, so the adjusted
/// configuration is the locally unique root reached by Newton iteration from
/// the nominal one.
pub fn tracking_step(
    q_nominal: &JointVector,
    cmd: &TrackingCommand,
    arm: &ArmModel,
    cfg: &PlannerConfig,
) -> TrackingResult {
    if cmd.is_zero() {
        return TrackingResult {
            q: *q_nominal,
            residual: 0.0,
            saturated: false,
        };
    }
    let mut q = *q_nominal;
    let mut residual: f64 = 0.0;
    for (side, pitch) in [
        (Side::Left, cmd.pitch_left_rad),
        (Side::Right, cmd.pitch_right_rad),
    ] {
        let nominal = arm.pad_pose(q_nominal, side);
        let target = PadPose {
            position_m: nominal.position_m + Vector2::new(side.outward() * cmd.separation_m, 0.0),
            pitch_rad: nominal.pitch_rad + pitch,
        };
        let (sol, res) = arm.inverse_kinematics(&q, side, &target);
        q = sol;
        residual = residual.max(res);
    }
    TrackingResult {
        q,
        residual,
        saturated: residual > cfg.tolerance,
    }
}

/// Carries the box along `trajectory` on a simulator whose grip has settled and
/// returns the trace so far. Slip trips are recorded without stopping the run; a
/// failed tracking adjustment aborts it.
pub fn run_tracking(
    trajectory: &Trajectory,
    simulator: &mut Simulator,
    gains: &ControllerGains,
) -> Result<SimTrace> {
    simulator.run_tracking(trajectory, gains)?;
    Ok(simulator.trace().clone())
}
