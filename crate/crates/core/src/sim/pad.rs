//! Compliant pad contact and synthetic load-cell readings.

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::contact::{
    ContactMode, ContactState, PressureField, JOINT_LIMIT_RAD, MAX_OFFSET_FRACTION,
};
use crate::error::{GripError, Result};
use crate::sensing::PadGeometry;

/// Deepest squeeze the contact model accepts before declaring interpenetration (m).
pub const MAX_SQUEEZE_M: f64 = 0.010;

/// Pad on a spring-loaded universal joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompliantPad {
    pub geometry: PadGeometry,
    pub joint_limit_rad: f64,
    /// Restoring torque per radian of joint deflection (N·m/rad).
    pub spring_stiffness_nm_per_rad: f64,
    /// Normal reaction per metre of squeeze (N/m).
    pub contact_stiffness_n_per_m: f64,
}

impl Default for CompliantPad {
    fn default() -> Self {
        Self {
            geometry: PadGeometry::default(),
            joint_limit_rad: JOINT_LIMIT_RAD,
            spring_stiffness_nm_per_rad: 1.0,
            contact_stiffness_n_per_m: 2000.0,
        }
    }
}

impl CompliantPad {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !(ok(self.joint_limit_rad)
            && ok(self.spring_stiffness_nm_per_rad)
            && ok(self.contact_stiffness_n_per_m))
        {
            return Err(GripError::InvalidParameter(
                "pad joint limit and stiffnesses must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn radius_m(&self) -> f64 {
        self.geometry.radius_m
    }
}

/// Settled contact of one pad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactResolution {
    pub state: ContactState,
    /// Pressure over the pad in full contact.
    pub field: Option<PressureField>,
    pub reaction_n: f64,
    /// Angle between the commanded pad normal and the face normal (rad).
    pub misalignment_rad: f64,
}

/// Misalignment angle and the pad-frame direction of the first point to touch.
///
/// `pad_rotation` maps pad to world; its third column is the pad normal pointing
/// at the face, and `face_normal` is the outward normal of the face.
pub fn misalignment(
    pad_rotation: &Matrix3<f64>,
    face_normal: &Vector3<f64>,
) -> (f64, Vector2<f64>) {
    let m = pad_rotation.transpose() * face_normal;
    let lateral = Vector2::new(m.x, m.y);
    let s = lateral.norm();
    let alpha = s.atan2(-m.z);
    if s <= 1e-15 {
        (alpha, Vector2::x())
    } else {
        (alpha, -lateral / s)
    }
}

/// Settles the pad against the face under `squeeze_m` of normal compression.
///
/// Up to the joint limit the pad turns flush, and the spring deflection shifts the
/// CoP toward the leading edge by `k_s α / f_n`. When the joint runs out of travel,
/// or the contact cannot supply the spring torque `k_s α` from a rim-located CoP,
/// the pad stays tilted and bears on its rim.
pub fn contact_resolve(
    pad: &CompliantPad,
    pad_rotation: &Matrix3<f64>,
    face_normal: &Vector3<f64>,
    squeeze_m: f64,
) -> Result<ContactResolution> {
    if !squeeze_m.is_finite() || squeeze_m > MAX_SQUEEZE_M {
        return Err(GripError::SimulationIntegrity(format!(
            "pad penetrates the face by {:.2} mm",
            squeeze_m * 1e3
        )));
    }
    let (alpha, dir) = misalignment(pad_rotation, face_normal);
    if squeeze_m <= 0.0 {
        return Ok(ContactResolution {
            state: ContactState::separated(),
            field: None,
            reaction_n: 0.0,
            misalignment_rad: alpha,
        });
    }
    let r = pad.radius_m();
    let k_s = pad.spring_stiffness_nm_per_rad;
    let f_n = pad.contact_stiffness_n_per_m * squeeze_m;
    let tilt = (alpha - pad.joint_limit_rad).max(alpha - f_n * r / k_s);
    if tilt > 0.0 {
        return Ok(ContactResolution {
            state: ContactState {
                mode: ContactMode::EdgeContact,
                tilt_rad: tilt,
                cop_offset_m: dir * r,
            },
            field: None,
            reaction_n: f_n,
            misalignment_rad: alpha,
        });
    }
    let offset = (k_s * alpha / f_n).min(MAX_OFFSET_FRACTION * r);
    let gradient = 4.0 * f_n * offset / (std::f64::consts::PI * r.powi(4));
    let field = PressureField::linear(f_n, gradient, dir, r)?;
    Ok(ContactResolution {
        state: ContactState {
            mode: ContactMode::FullContact,
            tilt_rad: 0.0,
            cop_offset_m: field.cop(),
        },
        field: Some(field),
        reaction_n: f_n,
        misalignment_rad: alpha,
    })
}

/// Systematic CoP error of the synthetic sensor: the reported CoP is pulled a
/// fraction of the way toward the nearest load cell.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SensorDistortion {
    pub pull_to_nearest: f64,
}

impl SensorDistortion {
    /// Magnitude used for the calibration studies.
    pub const CALIBRATION_STUDY: Self = Self {
        pull_to_nearest: 0.2,
    };

    pub fn apply(&self, p: &Vector2<f64>, geometry: &PadGeometry) -> Vector2<f64> {
        if self.pull_to_nearest == 0.0 {
            return *p;
        }
        let nearest = geometry
            .sensor_positions_m
            .iter()
            .min_by(|a, b| (*a - p).norm().total_cmp(&(*b - p).norm()))
            .expect("three sensors");
        p + (nearest - p) * self.pull_to_nearest
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthReadings {
    pub forces_n: [f64; 3],
    /// The requested CoP was outside the sensor triangle and was moved onto it.
    pub clamped: bool,
}

fn closest_on_segment(p: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> Vector2<f64> {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    a + ab * t
}

/// Barycentric weights of the triangle point closest to `p`.
fn clamped_weights(p: &Vector2<f64>, geometry: &PadGeometry) -> ([f64; 3], bool) {
    let w = geometry.barycentric(p);
    if w.iter().all(|&x| x >= 0.0) {
        return (w, false);
    }
    let s = geometry.sensor_positions_m;
    let best = [(0, 1), (1, 2), (2, 0)]
        .iter()
        .map(|&(i, j)| closest_on_segment(p, &s[i], &s[j]))
        .min_by(|a, b| (a - p).norm().total_cmp(&(b - p).norm()))
        .expect("three edges");
    let w = geometry.barycentric(&best).map(|x| x.max(0.0));
    let total: f64 = w.iter().sum();
    (w.map(|x| x / total), true)
}

/// Load-cell forces for a contact of `normal_force_n` whose CoP is the state's
/// offset, optionally distorted and with independent Gaussian noise per cell.
///
/// Noisy readings are floored at zero.
pub fn synth_readings<R: Rng + ?Sized>(
    state: &ContactState,
    normal_force_n: f64,
    geometry: &PadGeometry,
    distortion: &SensorDistortion,
    noise_sigma_n: f64,
    rng: &mut R,
) -> Result<SynthReadings> {
    if state.mode == ContactMode::Separated || normal_force_n <= 0.0 {
        return Err(GripError::InvalidParameter(
            "load-cell readings need an established contact".into(),
        ));
    }
    let target = distortion.apply(&state.cop_offset_m, geometry);
    let (w, clamped) = clamped_weights(&target, geometry);
    let mut forces_n = w.map(|x| x * normal_force_n);
    if noise_sigma_n > 0.0 {
        let normal = Normal::new(0.0, noise_sigma_n)
            .map_err(|e| GripError::InvalidParameter(format!("noise sigma: {e}")))?;
        for f in forces_n.iter_mut() {
            *f = (*f + normal.sample(rng)).max(0.0);
        }
    }
    Ok(SynthReadings { forces_n, clamped })
}
