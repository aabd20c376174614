//! Decoupled integral controllers: CoP alignment through a counter-rotation of
//! the pad, and grip force through a symmetric change of pad separation.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::contact::required_grip_force_offset;
use crate::error::{GripError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerGains {
    /// Alignment gain (rad/m).
    pub k_c: f64,
    /// Force gain during the grip phase (m/N).
    pub k_f: f64,
    /// Force gain during tracking (m/N).
    pub k_s: f64,
    pub cop_deadzone_m: f64,
    pub force_deadzone_n: f64,
    /// Contact threshold ξ (N).
    pub contact_threshold_n: f64,
    /// Pre-contact setpoint (N).
    pub f_d1: f64,
    /// Task setpoint (N).
    pub f_d2: f64,
    pub tick_hz: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            k_c: 0.5,
            k_f: 2e-4,
            k_s: 2e-4,
            cop_deadzone_m: 0.010,
            force_deadzone_n: 0.05,
            contact_threshold_n: 0.2,
            f_d1: 0.3,
            f_d2: 2.0,
            tick_hz: 85.0,
        }
    }
}

impl ControllerGains {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k_c", self.k_c),
            ("k_f", self.k_f),
            ("k_s", self.k_s),
            ("contact_threshold_n", self.contact_threshold_n),
            ("f_d1", self.f_d1),
            ("f_d2", self.f_d2),
            ("tick_hz", self.tick_hz),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(GripError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("cop_deadzone_m", self.cop_deadzone_m),
            ("force_deadzone_n", self.force_deadzone_n),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(GripError::InvalidParameter(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        if self.f_d1 >= self.f_d2 {
            return Err(GripError::InvalidParameter(format!(
                "f_d1 ({}) must be below f_d2 ({})",
                self.f_d1, self.f_d2
            )));
        }
        Ok(())
    }

    pub fn tick_s(&self) -> f64 {
        1.0 / self.tick_hz
    }
}

/// Shifted dead zone: zero for `|e| ≤ t`, otherwise `sign(e)(|e| − t)`.
pub fn dead_zone(e: f64, threshold: f64) -> f64 {
    if e.abs() <= threshold {
        0.0
    } else {
        e.signum() * (e.abs() - threshold)
    }
}

/// Counter-rotation of a pad about an in-plane axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentCommand {
    /// Unit axis in the pad plane, or zero when no rotation is requested.
    pub axis: Vector2<f64>,
    pub angle_rad: f64,
}

impl AlignmentCommand {
    pub fn zero() -> Self {
        Self {
            axis: Vector2::zeros(),
            angle_rad: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.angle_rad == 0.0
    }

    /// Axis lifted into the pad frame (normal along z).
    pub fn axis3(&self) -> Vector3<f64> {
        Vector3::new(self.axis.x, self.axis.y, 0.0)
    }
}

/// Change of pad separation for one tick (m). Positive values move each pad
/// away from the box by `delta_s`, negative values squeeze.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceCommand {
    pub delta_s: f64,
}

/// Rotation that drives the CoP back toward the pad centre.
pub fn alignment_step(cop: &Vector2<f64>, gains: &ControllerGains) -> AlignmentCommand {
    let dist = cop.norm();
    let angle = gains.k_c * dead_zone(dist, gains.cop_deadzone_m);
    if angle == 0.0 || dist == 0.0 {
        return AlignmentCommand::zero();
    }
    let u = cop / dist;
    AlignmentCommand {
        axis: Vector2::new(-u.y, u.x),
        angle_rad: angle,
    }
}

fn skew(n: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -n.z, n.y, n.z, 0.0, -n.x, -n.y, n.x, 0.0)
}

/// `R = I + n̂ sin θ + n̂² (1 − cos θ)`; a non-unit axis is normalized with a warning.
pub fn rodrigues(axis: &Vector3<f64>, angle_rad: f64) -> Matrix3<f64> {
    if angle_rad == 0.0 {
        return Matrix3::identity();
    }
    let norm = axis.norm();
    if norm == 0.0 || !norm.is_finite() {
        log::warn!("rotation axis is degenerate; returning identity");
        return Matrix3::identity();
    }
    let n = if (norm - 1.0).abs() > 1e-12 {
        log::warn!("rotation axis norm {norm} normalized");
        axis / norm
    } else {
        *axis
    };
    let k = skew(&n);
    Matrix3::identity() + k * angle_rad.sin() + k * k * (1.0 - angle_rad.cos())
}

/// Nearest rotation matrix (polar factor of the SVD).
pub fn orthonormalize(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut r = u * vt;
    if r.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        r = u * vt;
    }
    r
}

/// `R[i+1] = R[i] R(n, Δθ)` with the axis in the body frame.
pub fn update_orientation(r_prev: &Matrix3<f64>, cmd: &AlignmentCommand) -> Matrix3<f64> {
    if cmd.is_zero() {
        return *r_prev;
    }
    orthonormalize(&(r_prev * rodrigues(&cmd.axis3(), cmd.angle_rad)))
}

/// Pre-contact setpoint `f_d1` up to and including the threshold ξ, then `f_d2`.
pub fn variable_setpoint(normal_force_n: f64, gains: &ControllerGains) -> f64 {
    if normal_force_n <= gains.contact_threshold_n {
        gains.f_d1
    } else {
        gains.f_d2
    }
}

/// `Δs = K_f g_f(½(f_L + f_R) − f_d)`.
pub fn force_step(f_left: f64, f_right: f64, f_d: f64, gains: &ControllerGains) -> ForceCommand {
    let err = 0.5 * (f_left + f_right) - f_d;
    ForceCommand {
        delta_s: gains.k_f * dead_zone(err, gains.force_deadzone_n),
    }
}

/// Reference normal force from the control line of the current CoP offset.
pub fn regulate_grip(
    gravity_force_n: f64,
    gravity_torque_nm: f64,
    cop: &Vector2<f64>,
    mu: f64,
    radius_m: f64,
) -> Result<f64> {
    if !(cop.x.is_finite() && cop.y.is_finite()) {
        return Err(GripError::InvalidMeasurement("non-finite CoP".into()));
    }
    required_grip_force_offset(gravity_force_n, gravity_torque_nm, mu, radius_m, cop.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::required_grip_force;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn orth_err(r: &Matrix3<f64>) -> f64 {
        (r.transpose() * r - Matrix3::identity()).norm()
    }

    #[test]
    fn dead_zone_shape() {
        assert_eq!(dead_zone(0.01, 0.01), 0.0);
        assert_eq!(dead_zone(-0.005, 0.01), 0.0);
        assert!((dead_zone(0.03, 0.01) - 0.02).abs() < 1e-17);
        assert!((dead_zone(-0.03, 0.01) + 0.02).abs() < 1e-17);
    }

    #[test]
    fn alignment_examples() {
        let g = ControllerGains::default();
        assert!(alignment_step(&Vector2::new(0.005, 0.0), &g).is_zero());
        let c = alignment_step(&Vector2::new(0.020, 0.0), &g);
        assert!((c.axis - Vector2::new(0.0, 1.0)).norm() < 1e-15);
        assert!((c.angle_rad - 0.5 * (0.020 - 0.010)).abs() < 1e-15);
        assert!(alignment_step(&Vector2::zeros(), &g).is_zero());
    }

    #[test]
    fn rodrigues_examples() {
        assert_eq!(rodrigues(&Vector3::y(), 0.0), Matrix3::identity());
        let r = rodrigues(&Vector3::y(), std::f64::consts::FRAC_PI_2);
        assert!((r * Vector3::z() - Vector3::x()).norm() < 1e-15);
        let n = Vector3::new(1.0, 2.0, -0.5).normalize();
        let ab = rodrigues(&n, 0.3) * rodrigues(&n, 0.9);
        assert!((ab - rodrigues(&n, 1.2)).norm() < 1e-12);
        assert!((rodrigues(&n, 0.7) * n - n).norm() < 1e-15);
        // non-unit axis is normalized
        assert!((rodrigues(&(n * 3.0), 0.7) - rodrigues(&n, 0.7)).norm() < 1e-15);
    }

    #[test]
    fn update_composes_about_fixed_axis() {
        let cmd = AlignmentCommand {
            axis: Vector2::new(0.0, 1.0),
            angle_rad: 0.01,
        };
        let mut r = Matrix3::identity();
        for _ in 0..50 {
            r = update_orientation(&r, &cmd);
        }
        assert!((r - rodrigues(&Vector3::y(), 0.5)).norm() < 1e-12);
        let r0 = rodrigues(&Vector3::x(), 0.2);
        assert_eq!(update_orientation(&r0, &AlignmentCommand::zero()), r0);
    }

    #[test]
    fn orientation_drift_stays_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut r = Matrix3::identity();
        for _ in 0..10_000 {
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let cmd = AlignmentCommand {
                axis: Vector2::new(t.cos(), t.sin()),
                angle_rad: rng.random_range(-0.2..0.2),
            };
            r = update_orientation(&r, &cmd);
        }
        assert!(orth_err(&r) < 1e-9);
        assert!((r.determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn setpoint_branches() {
        let g = ControllerGains::default();
        assert_eq!(variable_setpoint(0.0, &g), g.f_d1);
        assert_eq!(variable_setpoint(g.contact_threshold_n, &g), g.f_d1);
        assert_eq!(variable_setpoint(10.0 * g.contact_threshold_n, &g), g.f_d2);
    }

    #[test]
    fn force_step_examples() {
        let g = ControllerGains::default();
        assert_eq!(force_step(2.0, 2.0, 2.0, &g).delta_s, 0.0);
        assert_eq!(force_step(2.03, 2.03, 2.0, &g).delta_s, 0.0);
        assert_eq!(force_step(1.0, 3.0, 2.0, &g).delta_s, 0.0);
        assert!(force_step(1.0, 1.0, 2.0, &g).delta_s < 0.0);
    }

    #[test]
    fn regulator_specializations() {
        assert_eq!(
            regulate_grip(1.0, 0.0, &Vector2::zeros(), 0.5, 0.03).unwrap(),
            2.0
        );
        assert_eq!(
            regulate_grip(0.8, 0.004, &Vector2::zeros(), 0.5, 0.03).unwrap(),
            required_grip_force(0.8, 0.004, 0.5, 0.03).unwrap()
        );
    }

    #[test]
    fn gains_validation() {
        assert!(ControllerGains::default().validate().is_ok());
        let g = ControllerGains {
            f_d1: 3.0,
            ..Default::default()
        };
        assert!(g.validate().is_err());
        let g = ControllerGains {
            k_c: 0.0,
            ..Default::default()
        };
        assert!(g.validate().is_err());
    }

    proptest! {
        #[test]
        fn axis_is_perpendicular_to_cop(x in -0.03f64..0.03, y in -0.03f64..0.03) {
            let c = alignment_step(&Vector2::new(x, y), &ControllerGains::default());
            prop_assert!(c.axis.dot(&Vector2::new(x, y)).abs() < 1e-15);
            prop_assert!(c.is_zero() || (c.axis.norm() - 1.0).abs() < 1e-15);
        }

        #[test]
        fn inside_dead_zone_is_exactly_zero(e in -0.05f64..0.05, cx in -0.007f64..0.007, cy in -0.007f64..0.007) {
            let g = ControllerGains::default();
            prop_assert_eq!(force_step(2.0 + e, 2.0 + e, 2.0, &g).delta_s.to_bits(), 0.0f64.to_bits());
            prop_assert!(alignment_step(&Vector2::new(cx, cy), &g).is_zero());
        }

        #[test]
        fn regulator_is_monotone(
            fg in 0.0f64..2.0, dfg in 0.0f64..1.0, tg in 0.0f64..0.02, dtg in 0.0f64..0.02,
            cx in -0.007f64..0.007, cy in -0.007f64..0.007,
        ) {
            let cop = Vector2::new(cx, cy);
            let base = regulate_grip(fg, tg, &cop, 0.5, 0.03).unwrap();
            prop_assert!(regulate_grip(fg + dfg, tg, &cop, 0.5, 0.03).unwrap() >= base * (1.0 - 1e-15));
            prop_assert!(regulate_grip(fg, tg + dtg, &cop, 0.5, 0.03).unwrap() >= base);
        }
    }
}
