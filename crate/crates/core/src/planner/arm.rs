//! Two planar three-joint arms working in the world y–z plane.
//!
//! Joints rotate about world x. Link angles are measured from +y toward +z. The
//! left arm sits on the +y side and its pad faces −y; the right arm mirrors it.

use nalgebra::{Matrix3, SVector, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{GripError, Result};

/// Joint vector of both arms: left joints first, then right.
pub type JointVector = SVector<f64, 6>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn offset(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 3,
        }
    }

    /// +1 for the left pad, −1 for the right: the direction along y that opens the grip.
    pub fn outward(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut r = a.rem_euclid(tau);
    if r > std::f64::consts::PI {
        r -= tau;
    }
    r
}

/// Rotation about world x.
pub fn rot_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Pad frame at zero pitch: columns are the pad x axis, pad y axis (up) and the
/// pad normal pointing at the object.
pub fn pad_frame_at_zero_pitch(side: Side) -> Matrix3<f64> {
    match side {
        Side::Left => Matrix3::from_columns(&[Vector3::x(), Vector3::z(), -Vector3::y()]),
        Side::Right => Matrix3::from_columns(&[-Vector3::x(), Vector3::z(), Vector3::y()]),
    }
}

/// Pad position (world y, z) and pitch about world x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PadPose {
    pub position_m: Vector2<f64>,
    pub pitch_rad: f64,
}

impl PadPose {
    pub fn position3(&self) -> Vector3<f64> {
        Vector3::new(0.0, self.position_m.x, self.position_m.y)
    }

    pub fn rotation(&self, side: Side) -> Matrix3<f64> {
        rot_x(self.pitch_rad) * pad_frame_at_zero_pitch(side)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArmModel {
    pub link_lengths_m: [f64; 3],
    pub q_min: [f64; 3],
    pub q_max: [f64; 3],
    /// Base positions (world y, z).
    pub left_base_m: Vector2<f64>,
    pub right_base_m: Vector2<f64>,
    /// Radius of the capsule around each link for clearance checks.
    pub link_radius_m: f64,
}

impl Default for ArmModel {
    fn default() -> Self {
        let pi = std::f64::consts::PI;
        Self {
            link_lengths_m: [0.09, 0.07, 0.03],
            q_min: [-pi, -2.8, -1.5],
            q_max: [pi, 2.8, 1.5],
            left_base_m: Vector2::new(0.10, 0.0),
            right_base_m: Vector2::new(-0.10, 0.0),
            link_radius_m: 0.01,
        }
    }
}

impl ArmModel {
    pub fn validate(&self) -> Result<()> {
        if self
            .link_lengths_m
            .iter()
            .any(|l| !(l.is_finite() && *l > 0.0))
        {
            return Err(GripError::InvalidParameter(
                "link lengths must be positive".into(),
            ));
        }
        for i in 0..3 {
            if !(self.q_min[i] < self.q_max[i]) {
                return Err(GripError::InvalidParameter(format!(
                    "joint {i}: q_min {} not below q_max {}",
                    self.q_min[i], self.q_max[i]
                )));
            }
        }
        if !(self.link_radius_m >= 0.0) {
            return Err(GripError::InvalidParameter("negative link radius".into()));
        }
        Ok(())
    }

    pub fn base(&self, side: Side) -> Vector2<f64> {
        match side {
            Side::Left => self.left_base_m,
            Side::Right => self.right_base_m,
        }
    }

    fn joints(q: &JointVector, side: Side) -> [f64; 3] {
        let o = side.offset();
        [q[o], q[o + 1], q[o + 2]]
    }

    /// Base, elbow, wrist and pad centre of one arm.
    pub fn joint_points(&self, q: &JointVector, side: Side) -> [Vector2<f64>; 4] {
        let qs = Self::joints(q, side);
        let mut pts = [self.base(side); 4];
        let mut phi = 0.0;
        for i in 0..3 {
            phi += qs[i];
            pts[i + 1] = pts[i] + Vector2::new(phi.cos(), phi.sin()) * self.link_lengths_m[i];
        }
        pts
    }

    pub fn pad_pose(&self, q: &JointVector, side: Side) -> PadPose {
        let qs = Self::joints(q, side);
        let phi = qs[0] + qs[1] + qs[2];
        let pitch = match side {
            Side::Left => wrap_angle(phi - std::f64::consts::PI),
            Side::Right => wrap_angle(phi),
        };
        PadPose {
            position_m: self.joint_points(q, side)[3],
            pitch_rad: pitch,
        }
    }

    /// Rows: pad y, pad z, pitch; columns: the arm's three joints.
    pub fn pad_jacobian(&self, q: &JointVector, side: Side) -> Matrix3<f64> {
        let qs = Self::joints(q, side);
        let mut phis = [0.0; 3];
        let mut acc = 0.0;
        for i in 0..3 {
            acc += qs[i];
            phis[i] = acc;
        }
        let mut j = Matrix3::zeros();
        for col in 0..3 {
            for (i, phi) in phis.iter().enumerate().skip(col) {
                let l = self.link_lengths_m[i];
                j[(0, col)] -= l * phi.sin();
                j[(1, col)] += l * phi.cos();
            }
            j[(2, col)] = 1.0;
        }
        j
    }

    /// Largest amount by which any joint leaves its range (0 when inside).
    pub fn limit_violation(&self, q: &JointVector) -> f64 {
        let mut worst: f64 = 0.0;
        for side in Side::BOTH {
            let o = side.offset();
            for i in 0..3 {
                worst = worst
                    .max(self.q_min[i] - q[o + i])
                    .max(q[o + i] - self.q_max[i]);
            }
        }
        worst
    }

    pub fn clamp(&self, q: &JointVector) -> JointVector {
        let mut out = *q;
        for side in Side::BOTH {
            let o = side.offset();
            for i in 0..3 {
                out[o + i] = out[o + i].clamp(self.q_min[i], self.q_max[i]);
            }
        }
        out
    }

    /// Newton solve of one arm for a pad pose, starting from `q_start`. Joints are
    /// clamped to their limits after each step. Returns the configuration and the
    /// final residual norm.
    pub fn inverse_kinematics(
        &self,
        q_start: &JointVector,
        side: Side,
        target: &PadPose,
    ) -> (JointVector, f64) {
        let mut q = *q_start;
        let o = side.offset();
        let residual = |q: &JointVector| {
            let p = self.pad_pose(q, side);
            let d = p.position_m - target.position_m;
            Vector3::new(d.x, d.y, wrap_angle(p.pitch_rad - target.pitch_rad))
        };
        let mut r = residual(&q);
        for _ in 0..100 {
            if r.norm() < 1e-14 {
                break;
            }
            let j = self.pad_jacobian(&q, side);
            let Some(step) = j.lu().solve(&r) else { break };
            let mut trial = q;
            let mut scale = 1.0;
            let mut improved = false;
            for _ in 0..20 {
                for i in 0..3 {
                    trial[o + i] = (q[o + i] - scale * step[i]).clamp(self.q_min[i], self.q_max[i]);
                }
                let rt = residual(&trial);
                if rt.norm() < r.norm() {
                    q = trial;
                    r = rt;
                    improved = true;
                    break;
                }
                scale *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (q, r.norm())
    }

    /// Both arms placed with pads at `left`/`right`, elbows bent away from the object.
    pub fn solve_pads(&self, left: &PadPose, right: &PadPose) -> Result<JointVector> {
        let mut q = JointVector::zeros();
        for (side, target) in [(Side::Left, left), (Side::Right, right)] {
            let seed = self.elbow_out_seed(side, target)?;
            let (sol, res) = self.inverse_kinematics(&seed, side, target);
            if res > 1e-10 {
                return Err(GripError::Planner(format!(
                    "{side:?} pad pose unreachable (residual {res:.3e})"
                )));
            }
            let o = side.offset();
            for i in 0..3 {
                q[o + i] = sol[o + i];
            }
        }
        Ok(q)
    }

    /// Closed-form two-link solution to the wrist with the elbow on the outer side.
    fn elbow_out_seed(&self, side: Side, target: &PadPose) -> Result<JointVector> {
        let [l1, l2, l3] = self.link_lengths_m;
        let phi3 = match side {
            Side::Left => target.pitch_rad + std::f64::consts::PI,
            Side::Right => target.pitch_rad,
        };
        let wrist = target.position_m - Vector2::new(phi3.cos(), phi3.sin()) * l3;
        let d = wrist - self.base(side);
        let dist = d.norm();
        let c2 = (dist * dist - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
        if !(-1.0..=1.0).contains(&c2) {
            return Err(GripError::Planner(format!(
                "{side:?} wrist out of reach ({:.4} m from base)",
                dist
            )));
        }
        let alpha = ((l1 * l1 + dist * dist - l2 * l2) / (2.0 * l1 * dist))
            .clamp(-1.0, 1.0)
            .acos();
        let toward = d.y.atan2(d.x);
        // outer side is +y for the left arm and −y for the right
        let phi1 = match side {
            Side::Left => toward + alpha,
            Side::Right => toward - alpha,
        };
        let elbow = self.base(side) + Vector2::new(phi1.cos(), phi1.sin()) * l1;
        let e = wrist - elbow;
        let phi2 = e.y.atan2(e.x);
        let mut q = JointVector::zeros();
        let o = side.offset();
        q[o] = wrap_angle(phi1);
        q[o + 1] = wrap_angle(phi2 - phi1);
        q[o + 2] = wrap_angle(phi3 - phi2);
        Ok(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn nominal(arm: &ArmModel) -> JointVector {
        let l = PadPose {
            position_m: Vector2::new(0.05, -0.10),
            pitch_rad: 0.0,
        };
        let r = PadPose {
            position_m: Vector2::new(-0.05, -0.10),
            pitch_rad: 0.0,
        };
        arm.solve_pads(&l, &r).unwrap()
    }

    #[test]
    fn wrap_angle_range() {
        assert_relative_eq!(
            wrap_angle(3.0 * std::f64::consts::PI),
            std::f64::consts::PI,
            epsilon = 1e-12
        );
        assert_relative_eq!(wrap_angle(-0.5), -0.5);
        assert_relative_eq!(
            wrap_angle(std::f64::consts::TAU + 0.25),
            0.25,
            epsilon = 1e-15
        );
    }

    #[test]
    fn pad_frames_face_each_other() {
        let l = pad_frame_at_zero_pitch(Side::Left);
        let r = pad_frame_at_zero_pitch(Side::Right);
        assert_relative_eq!(l.determinant(), 1.0);
        assert_relative_eq!(r.determinant(), 1.0);
        assert_relative_eq!(l.column(2).dot(&r.column(2)), -1.0);
    }

    #[test]
    fn solve_pads_reaches_targets_within_limits() {
        let arm = ArmModel::default();
        let q = nominal(&arm);
        let pl = arm.pad_pose(&q, Side::Left);
        let pr = arm.pad_pose(&q, Side::Right);
        assert!((pl.position_m - Vector2::new(0.05, -0.10)).norm() < 1e-12);
        assert!((pr.position_m - Vector2::new(-0.05, -0.10)).norm() < 1e-12);
        assert!(pl.pitch_rad.abs() < 1e-12 && pr.pitch_rad.abs() < 1e-12);
        assert_eq!(arm.limit_violation(&q), 0.0);
        // elbows bend away from the object
        assert!(arm.joint_points(&q, Side::Left)[1].x > 0.10);
        assert!(arm.joint_points(&q, Side::Right)[1].x < -0.10);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let arm = ArmModel::default();
        let q = nominal(&arm);
        for side in Side::BOTH {
            let j = arm.pad_jacobian(&q, side);
            let h = 1e-7;
            for c in 0..3 {
                let mut qp = q;
                let mut qm = q;
                qp[side.offset() + c] += h;
                qm[side.offset() + c] -= h;
                let (a, b) = (arm.pad_pose(&qp, side), arm.pad_pose(&qm, side));
                let dp = (a.position_m - b.position_m) / (2.0 * h);
                assert!((dp.x - j[(0, c)]).abs() < 1e-7);
                assert!((dp.y - j[(1, c)]).abs() < 1e-7);
                assert!((wrap_angle(a.pitch_rad - b.pitch_rad) / (2.0 * h) - 1.0).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn unreachable_pose_is_reported() {
        let arm = ArmModel::default();
        let far = PadPose {
            position_m: Vector2::new(0.05, -0.5),
            pitch_rad: 0.0,
        };
        assert!(arm.solve_pads(&far, &far).is_err());
    }
}
