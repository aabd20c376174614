//! The gripped box and the gravity load it puts on each pad.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{GripError, Result};
use crate::planner::Side;
use crate::sensing::GRAVITY;

/// Largest side-face tilt the box model accepts (rad).
pub const MAX_FACE_TILT_RAD: f64 = 20.0 * std::f64::consts::PI / 180.0;

/// Rigid box squeezed between the pads along world y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxObject {
    /// Extent along x (depth), y (width between the gripped faces) and z (height).
    pub size_m: Vector3<f64>,
    pub mass_kg: f64,
    /// Centre of mass relative to the geometric centre, body frame.
    pub com_offset_m: Vector3<f64>,
    /// Inclination of both gripped faces away from vertical (rad). The faces lean
    /// inward toward the top, so the outward normals point slightly upward.
    pub face_tilt_rad: f64,
    pub mu: f64,
}

impl Default for BoxObject {
    fn default() -> Self {
        Self {
            size_m: Vector3::new(0.06, 0.08, 0.10),
            mass_kg: 0.1,
            com_offset_m: Vector3::zeros(),
            face_tilt_rad: 0.0,
            mu: 0.5,
        }
    }
}

impl BoxObject {
    pub fn validate(&self) -> Result<()> {
        if !self.size_m.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(GripError::InvalidParameter(format!(
                "box size must be positive, got {:?}",
                self.size_m.as_slice()
            )));
        }
        if !(self.mass_kg.is_finite() && self.mass_kg > 0.0) {
            return Err(GripError::InvalidParameter(format!(
                "box mass must be positive, got {}",
                self.mass_kg
            )));
        }
        for i in 0..3 {
            if !(self.com_offset_m[i].abs() <= 0.5 * self.size_m[i]) {
                return Err(GripError::InvalidParameter(
                    "centre of mass lies outside the box".into(),
                ));
            }
        }
        if !(0.0..=MAX_FACE_TILT_RAD + 1e-12).contains(&self.face_tilt_rad) {
            return Err(GripError::InvalidParameter(format!(
                "face tilt {:.2}° outside [0°, 20°]",
                self.face_tilt_rad.to_degrees()
            )));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(GripError::InvalidParameter(format!(
                "friction coefficient {}",
                self.mu
            )));
        }
        Ok(())
    }

    pub fn weight_n(&self) -> f64 {
        self.mass_kg * GRAVITY
    }

    /// Outward unit normal of the face touched by `side`, body frame.
    pub fn face_normal(&self, side: Side) -> Vector3<f64> {
        let (s, c) = self.face_tilt_rad.sin_cos();
        Vector3::new(0.0, side.outward() * c, s)
    }

    /// Centre of the face touched by `side`, body frame.
    pub fn face_center(&self, side: Side) -> Vector3<f64> {
        Vector3::new(0.0, side.outward() * 0.5 * self.size_m.y, 0.0)
    }
}

/// Box placement: position of the geometric centre and a roll about the grip
/// axis (world y).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoxPose {
    pub position_m: Vector3<f64>,
    pub roll_rad: f64,
}

impl BoxPose {
    pub fn rotation(&self) -> Matrix3<f64> {
        let (s, c) = self.roll_rad.sin_cos();
        Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
    }

    pub fn to_world(&self, body_point: &Vector3<f64>) -> Vector3<f64> {
        self.position_m + self.rotation() * body_point
    }

    pub fn face_normal_world(&self, body: &BoxObject, side: Side) -> Vector3<f64> {
        self.rotation() * body.face_normal(side)
    }

    pub fn face_center_world(&self, body: &BoxObject, side: Side) -> Vector3<f64> {
        self.to_world(&body.face_center(side))
    }

    pub fn com_world(&self, body: &BoxObject) -> Vector3<f64> {
        self.to_world(&body.com_offset_m)
    }
}

/// Per-pad gravity load `(f_g, τ_g)`: the in-plane part of half the weight and the
/// magnitude of its moment about the pad normal through the grip point.
///
/// `grip_points` are the left and right contact points in world coordinates.
pub fn gravity_wrench(
    body: &BoxObject,
    pose: &BoxPose,
    grip_points: &[Vector3<f64>; 2],
) -> [(f64, f64); 2] {
    let half = Vector3::new(0.0, 0.0, -0.5 * body.weight_n());
    let com = pose.com_world(body);
    let mut out = [(0.0, 0.0); 2];
    for (i, side) in Side::BOTH.iter().enumerate() {
        let n = pose.face_normal_world(body, *side);
        let tangential = half - n * half.dot(&n);
        let tau = (com - grip_points[i]).cross(&half).dot(&n);
        out[i] = (tangential.norm(), tau.abs());
    }
    out
}
