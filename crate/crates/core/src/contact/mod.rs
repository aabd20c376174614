//! Friction between a flat circular pad and a rigid face.
//!
//! The pad carries a linear pressure field `p(x) = a·(x·ê) + p0` over a disk of
//! radius `R`. Friction wrenches for a given center of rotation (CoR) are found by
//! quadrature; sweeping the CoR traces the limit curve in the
//! (tangential force, torque) plane. Closed forms for the control-line points
//! and the grip-force laws live in [`grip`].

mod grip;
mod limit;
mod quadrature;

pub use grip::{
    analytic_points, gradient_coefficient, max_tangential_force, required_grip_force,
    required_grip_force_offset, AnalyticPoints, ClampedOffset,
};
pub use limit::{check_slip, limit_curve, LimitCurve, SlipClass};
pub use quadrature::{friction_wrench_at_cor, friction_wrench_with_nodes, unit_velocity};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{GripError, Result};

/// Largest CoP offset, as a fraction of the radius, for which a linear field stays
/// nonnegative over the whole disk.
pub const MAX_OFFSET_FRACTION: f64 = 0.25;

/// Universal-joint travel of the pad (rad).
pub const JOINT_LIMIT_RAD: f64 = 25.0 * std::f64::consts::PI / 180.0;

/// Linear pressure distribution over the pad disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureField {
    /// Mean pressure `p0 = f_n / (πR²)` (N/m²).
    pub mean_pressure: f64,
    /// Gradient magnitude `a` (N/m³).
    pub gradient: f64,
    /// Unit direction of increasing pressure, in the pad frame.
    pub direction: Vector2<f64>,
    pub radius_m: f64,
}

impl PressureField {
    pub fn uniform(normal_force_n: f64, radius_m: f64) -> Result<Self> {
        Self::linear(normal_force_n, 0.0, Vector2::x(), radius_m)
    }

    pub fn linear(
        normal_force_n: f64,
        gradient: f64,
        direction: Vector2<f64>,
        radius_m: f64,
    ) -> Result<Self> {
        if !(radius_m.is_finite() && radius_m > 0.0) {
            return Err(GripError::InvalidParameter(format!(
                "pad radius {radius_m}"
            )));
        }
        if !(normal_force_n.is_finite() && normal_force_n >= 0.0) {
            return Err(GripError::InvalidParameter(format!(
                "normal force must be nonnegative, got {normal_force_n}"
            )));
        }
        let norm = direction.norm();
        if !(gradient.is_finite() && gradient >= 0.0) || (gradient > 0.0 && norm == 0.0) {
            return Err(GripError::InvalidParameter("bad pressure gradient".into()));
        }
        let field = Self {
            mean_pressure: normal_force_n / (std::f64::consts::PI * radius_m * radius_m),
            gradient,
            direction: if norm > 0.0 {
                direction / norm
            } else {
                Vector2::x()
            },
            radius_m,
        };
        // p ≥ 0 on the rim with a little slack for round-off
        if field.gradient * radius_m > field.mean_pressure * (1.0 + 1e-12) {
            return Err(GripError::InvalidParameter(format!(
                "pressure field goes negative: a·R = {:.4e} > p0 = {:.4e}",
                field.gradient * radius_m,
                field.mean_pressure
            )));
        }
        Ok(field)
    }

    /// Field whose CoP sits at `cop`; offsets beyond `R/4` are clamped (with a warning).
    pub fn with_cop(normal_force_n: f64, cop: Vector2<f64>, radius_m: f64) -> Result<Self> {
        let dist = cop.norm();
        let ClampedOffset { gradient, .. } = gradient_coefficient(normal_force_n, dist, radius_m);
        let dir = if dist > 0.0 { cop / dist } else { Vector2::x() };
        Self::linear(normal_force_n, gradient, dir, radius_m)
    }

    pub fn pressure_at(&self, p: &Vector2<f64>) -> f64 {
        self.mean_pressure + self.gradient * self.direction.dot(p)
    }

    pub fn normal_force(&self) -> f64 {
        self.mean_pressure * std::f64::consts::PI * self.radius_m * self.radius_m
    }

    /// Analytic CoP: `a π R⁴ / (4 f_n)` along the gradient direction.
    pub fn cop(&self) -> Vector2<f64> {
        let fnorm = self.normal_force();
        if fnorm == 0.0 {
            return Vector2::zeros();
        }
        let r4 = self.radius_m.powi(4);
        self.direction * (self.gradient * std::f64::consts::PI * r4 / (4.0 * fnorm))
    }

    /// Same field with its CoP rotated onto the +x axis.
    pub fn aligned_to_x(&self) -> Self {
        Self {
            direction: Vector2::x(),
            ..*self
        }
    }
}

/// Friction force and torque about the pad center (pad frame).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrictionWrench {
    pub force: Vector2<f64>,
    pub torque: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContactMode {
    FullContact,
    EdgeContact,
    Separated,
}

impl ContactMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ContactMode::FullContact => "full",
            ContactMode::EdgeContact => "edge",
            ContactMode::Separated => "separated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactState {
    pub mode: ContactMode,
    /// Residual tilt between pad and face in edge contact (rad).
    pub tilt_rad: f64,
    /// CoP offset in the pad frame (full contact); rim point in edge contact.
    pub cop_offset_m: Vector2<f64>,
}

impl ContactState {
    pub fn separated() -> Self {
        Self {
            mode: ContactMode::Separated,
            tilt_rad: 0.0,
            cop_offset_m: Vector2::zeros(),
        }
    }
}
