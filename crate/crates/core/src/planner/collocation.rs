use nalgebra::{DMatrix, DVector, Matrix3, Matrix4x6, Vector2, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use super::arm::{pad_frame_at_zero_pitch, rot_x, wrap_angle, ArmModel, JointVector, Side};
use crate::error::{GripError, Result};
use crate::numeric::{levenberg_marquardt, LmOptions};

/// Object held between the pads, as an axis-aligned rectangle in the y–z plane
/// that moves with the pad midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleBox {
    /// Rectangle centre relative to the midpoint of the two pads (m).
    pub offset_from_pads_m: Vector2<f64>,
    pub half_extents_m: Vector2<f64>,
}

impl ObstacleBox {
    fn center(&self, arm: &ArmModel, q: &JointVector) -> Vector2<f64> {
        let l = arm.pad_pose(q, Side::Left).position_m;
        let r = arm.pad_pose(q, Side::Right).position_m;
        (l + r) * 0.5 + self.offset_from_pads_m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Number of collocation nodes N.
    pub nodes: usize,
    /// Interpolated control nodes per segment m.
    pub interpolation: usize,
    pub state_weight: f64,
    pub control_weight: f64,
    pub tolerance: f64,
    pub clearance_m: f64,
    pub max_outer_iterations: usize,
    pub obstacle: Option<ObstacleBox>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            nodes: 20,
            interpolation: 10,
            state_weight: 1.0,
            control_weight: 1e4,
            tolerance: 1e-6,
            clearance_m: 0.005,
            max_outer_iterations: 500,
            obstacle: None,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 || self.interpolation < 1 {
            return Err(GripError::InvalidParameter(format!(
                "need N ≥ 2 and m ≥ 1 (got N = {}, m = {})",
                self.nodes, self.interpolation
            )));
        }
        if !(self.tolerance > 0.0) || !(self.state_weight >= 0.0) || !(self.control_weight >= 0.0) {
            return Err(GripError::InvalidParameter(
                "planner weights/tolerance".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub nodes: Vec<JointVector>,
    /// `controls[k] = nodes[k+1] − nodes[k]`.
    pub controls: Vec<JointVector>,
    /// Grip-force reference per node (N); filled in during tracking.
    pub force_ref_n: Vec<f64>,
    /// Scripted roll of the object about the grip axis per node (rad).
    pub wrist_roll_rad: Vec<f64>,
}

impl Trajectory {
    /// Builds controls so that `nodes[k] + controls[k] == nodes[k+1]` holds bitwise.
    pub fn from_nodes(nodes: Vec<JointVector>) -> Self {
        let mut exact = Vec::with_capacity(nodes.len());
        let mut controls = Vec::with_capacity(nodes.len().saturating_sub(1));
        if let Some(first) = nodes.first() {
            exact.push(*first);
        }
        for k in 1..nodes.len() {
            let prev = exact[k - 1];
            let mut u = JointVector::zeros();
            for i in 0..6 {
                u[i] = exact_step(prev[i], nodes[k][i]);
            }
            controls.push(u);
            exact.push(prev + u);
        }
        let n = exact.len();
        Self {
            nodes: exact,
            controls,
            force_ref_n: vec![0.0; n],
            wrist_roll_rad: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Appends `other`, whose first node must coincide with this trajectory's last.
    pub fn concat(&mut self, other: &Trajectory) -> Result<()> {
        match (self.nodes.last(), other.nodes.first()) {
            (Some(a), Some(b)) if a == b => {}
            (None, _) => {
                *self = other.clone();
                return Ok(());
            }
            _ => return Err(GripError::Planner("trajectories do not join".into())),
        }
        self.nodes.extend_from_slice(&other.nodes[1..]);
        self.controls.extend_from_slice(&other.controls);
        self.force_ref_n.extend_from_slice(&other.force_ref_n[1..]);
        self.wrist_roll_rad
            .extend_from_slice(&other.wrist_roll_rad[1..]);
        Ok(())
    }
}

/// A float `d` with `a + d == b`, or the closest candidate when none exists.
fn exact_step(a: f64, b: f64) -> f64 {
    let d = b - a;
    if a + d == b {
        return d;
    }
    let mut lo = d;
    let mut hi = d;
    for _ in 0..4 {
        lo = lo.next_down();
        hi = hi.next_up();
        if a + lo == b {
            return lo;
        }
        if a + hi == b {
            return hi;
        }
    }
    d
}

/// Per-node equality constraints: relative pad translation and both pad pitches.
struct NodeConstraints<'a> {
    arm: &'a ArmModel,
    relative_m: Vector2<f64>,
    pitch_left: f64,
    pitch_right: f64,
}

impl NodeConstraints<'_> {
    fn value(&self, q: &JointVector) -> Vector4<f64> {
        let l = self.arm.pad_pose(q, Side::Left);
        let r = self.arm.pad_pose(q, Side::Right);
        let d = l.position_m - r.position_m - self.relative_m;
        Vector4::new(
            d.x,
            d.y,
            wrap_angle(l.pitch_rad - self.pitch_left),
            wrap_angle(r.pitch_rad - self.pitch_right),
        )
    }

    fn jacobian(&self, q: &JointVector) -> Matrix4x6<f64> {
        let jl = self.arm.pad_jacobian(q, Side::Left);
        let jr = self.arm.pad_jacobian(q, Side::Right);
        let mut j = Matrix4x6::zeros();
        for c in 0..3 {
            j[(0, c)] = jl[(0, c)];
            j[(1, c)] = jl[(1, c)];
            j[(0, 3 + c)] = -jr[(0, c)];
            j[(1, 3 + c)] = -jr[(1, c)];
            j[(2, c)] = 1.0;
            j[(3, 3 + c)] = 1.0;
        }
        j
    }

    /// Minimum-norm Newton projection onto the constraint manifold.
    fn project(&self, q: &JointVector) -> JointVector {
        let mut q = *q;
        for _ in 0..50 {
            let c = self.value(&q);
            if c.amax() < 1e-15 {
                break;
            }
            let j = self.jacobian(&q);
            let jjt = j * j.transpose();
            let Some(y) = jjt.cholesky().map(|ch| ch.solve(&c)) else {
                break;
            };
            q -= j.transpose() * y;
        }
        q
    }
}

fn point_segment_distance(p: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a + ab * t - p).norm()
}

fn point_rect_distance(p: &Vector2<f64>, center: &Vector2<f64>, half: &Vector2<f64>) -> f64 {
    let d = (p - center).abs() - half;
    Vector2::new(d.x.max(0.0), d.y.max(0.0)).norm()
}

fn segment_hits_rect(
    a: &Vector2<f64>,
    b: &Vector2<f64>,
    center: &Vector2<f64>,
    half: &Vector2<f64>,
) -> bool {
    // Liang–Barsky clipping of a + t(b − a), t ∈ [0, 1]
    let (lo, hi) = (center - half, center + half);
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [
        (-d.x, a.x - lo.x),
        (d.x, hi.x - a.x),
        (-d.y, a.y - lo.y),
        (d.y, hi.y - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Distance between a link segment and the rectangle (0 when they overlap).
pub fn segment_rect_distance(
    a: &Vector2<f64>,
    b: &Vector2<f64>,
    center: &Vector2<f64>,
    half: &Vector2<f64>,
) -> f64 {
    if segment_hits_rect(a, b, center, half) {
        return 0.0;
    }
    let corners = [
        center + Vector2::new(half.x, half.y),
        center + Vector2::new(-half.x, half.y),
        center + Vector2::new(half.x, -half.y),
        center + Vector2::new(-half.x, -half.y),
    ];
    let mut d = point_rect_distance(a, center, half).min(point_rect_distance(b, center, half));
    for c in &corners {
        d = d.min(point_segment_distance(c, a, b));
    }
    d
}

/// Clearance shortfalls of the two proximal links of each arm (0 when clear).
fn clearance_shortfall(arm: &ArmModel, cfg: &PlannerConfig, q: &JointVector) -> [f64; 4] {
    let Some(obs) = cfg.obstacle else {
        return [0.0; 4];
    };
    let center = obs.center(arm, q);
    let need = cfg.clearance_m + arm.link_radius_m;
    let mut out = [0.0; 4];
    for (s, side) in Side::BOTH.iter().enumerate() {
        let pts = arm.joint_points(q, *side);
        for link in 0..2 {
            let d = segment_rect_distance(&pts[link], &pts[link + 1], &center, &obs.half_extents_m);
            out[2 * s + link] = (need - d).max(0.0);
        }
    }
    out
}

/// Smallest link-to-object clearance over both arms (m), net of the link radius.
pub fn min_clearance(arm: &ArmModel, cfg: &PlannerConfig, q: &JointVector) -> f64 {
    let Some(obs) = cfg.obstacle else {
        return f64::INFINITY;
    };
    let center = obs.center(arm, q);
    let mut best = f64::INFINITY;
    for side in Side::BOTH {
        let pts = arm.joint_points(q, side);
        for link in 0..2 {
            let d = segment_rect_distance(&pts[link], &pts[link + 1], &center, &obs.half_extents_m);
            best = best.min(d - arm.link_radius_m);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub trajectory: Trajectory,
    pub cost: f64,
    pub outer_iterations: usize,
    pub certification: CertificationReport,
}

fn plan_cost(nodes: &[JointVector], goal: &JointVector, cfg: &PlannerConfig) -> f64 {
    let mut c = 0.0;
    for q in nodes {
        c += cfg.state_weight * (goal - q).norm_squared();
    }
    for w in nodes.windows(3) {
        c += cfg.control_weight * (w[2] - 2.0 * w[1] + w[0]).norm_squared();
    }
    c
}

/// Plans `N` nodes from `q_initial` to `q_goal` keeping the pads a fixed distance
/// `delta_s_rel` apart along y, level with each other, and at constant pitch.
pub fn plan_trajectory(
    q_initial: &JointVector,
    q_goal: &JointVector,
    delta_s_rel: f64,
    arm: &ArmModel,
    cfg: &PlannerConfig,
) -> Result<PlanReport> {
    cfg.validate()?;
    arm.validate()?;
    let cons = NodeConstraints {
        arm,
        relative_m: Vector2::new(delta_s_rel, 0.0),
        pitch_left: arm.pad_pose(q_initial, Side::Left).pitch_rad,
        pitch_right: arm.pad_pose(q_initial, Side::Right).pitch_rad,
    };
    for (name, q) in [("initial", q_initial), ("goal", q_goal)] {
        let viol = cons.value(q).amax();
        let lim = arm.limit_violation(q);
        let clear = clearance_shortfall(arm, cfg, q)
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        let worst = viol.max(lim).max(clear);
        if worst > cfg.tolerance {
            return Err(GripError::Planner(format!(
                "infeasible {name} configuration: max violation {worst:.3e} \
                 (pose {viol:.3e}, limits {lim:.3e}, clearance {clear:.3e})"
            )));
        }
    }

    let n = cfg.nodes;
    let m = n - 2;
    let mut outer_iterations = 0;
    let nodes: Vec<JointVector> = if q_initial == q_goal || m == 0 {
        let mut v = vec![*q_initial; n];
        v[n - 1] = *q_goal;
        v
    } else {
        let mut x = DVector::zeros(6 * m);
        for k in 0..m {
            let t = (k + 1) as f64 / (n - 1) as f64;
            let q = cons.project(&(q_initial + (q_goal - q_initial) * t));
            x.rows_mut(6 * k, 6).copy_from(&q);
        }
        let assemble = |x: &DVector<f64>| -> Vec<JointVector> {
            let mut v = Vec::with_capacity(n);
            v.push(*q_initial);
            for k in 0..m {
                v.push(JointVector::from_iterator(x.rows(6 * k, 6).iter().copied()));
            }
            v.push(*q_goal);
            v
        };
        let sq = cfg.state_weight.sqrt();
        let su = cfg.control_weight.sqrt();
        let n_res = 6 * m + 6 * m + 4 * m + 4 * m;
        let mut rho: f64 = 1e2;
        let mut lambdas = vec![Vector4::zeros(); m];

        while outer_iterations < cfg.max_outer_iterations.min(60) {
            outer_iterations += 1;
            let sr = rho.sqrt();
            let residuals = |x: &DVector<f64>| {
                let q = assemble(x);
                let mut r = DVector::zeros(n_res);
                let mut row = 0;
                for qk in &q[1..=m] {
                    r.rows_mut(row, 6).copy_from(&((qk - q_goal) * sq));
                    row += 6;
                }
                for k in 0..m {
                    r.rows_mut(row, 6)
                        .copy_from(&((q[k + 2] - 2.0 * q[k + 1] + q[k]) * su));
                    row += 6;
                }
                for k in 0..m {
                    let c = cons.value(&q[k + 1]) + lambdas[k] / rho;
                    r.rows_mut(row, 4).copy_from(&(c * sr));
                    row += 4;
                }
                for k in 0..m {
                    let s = clearance_shortfall(arm, cfg, &q[k + 1]);
                    for (i, v) in s.iter().enumerate() {
                        r[row + i] = sr * v;
                    }
                    row += 4;
                }
                r
            };
            let jacobian = |x: &DVector<f64>| {
                let q = assemble(x);
                let mut j = DMatrix::zeros(n_res, 6 * m);
                for k in 0..m {
                    for i in 0..6 {
                        j[(6 * k + i, 6 * k + i)] = sq;
                    }
                }
                let base = 6 * m;
                // second difference of node k+1 touches interior nodes k, k+1, k+2 (1-based)
                for k in 0..m {
                    for (off, coef) in [(0isize, 1.0), (1, -2.0), (2, 1.0)] {
                        let node = k as isize + off - 1;
                        if node < 0 || node >= m as isize {
                            continue;
                        }
                        for i in 0..6 {
                            j[(base + 6 * k + i, 6 * node as usize + i)] = su * coef;
                        }
                    }
                }
                let base = 12 * m;
                for k in 0..m {
                    let jc = cons.jacobian(&q[k + 1]) * sr;
                    j.view_mut((base + 4 * k, 6 * k), (4, 6)).copy_from(&jc);
                }
                let base = 16 * m;
                if cfg.obstacle.is_some() {
                    let h = 1e-7;
                    for k in 0..m {
                        for i in 0..6 {
                            let mut qp = q[k + 1];
                            let mut qm = q[k + 1];
                            qp[i] += h;
                            qm[i] -= h;
                            let (sp, sm) = (
                                clearance_shortfall(arm, cfg, &qp),
                                clearance_shortfall(arm, cfg, &qm),
                            );
                            for l in 0..4 {
                                j[(base + 4 * k + l, 6 * k + i)] = sr * (sp[l] - sm[l]) / (2.0 * h);
                            }
                        }
                    }
                }
                j
            };
            let report = levenberg_marquardt(
                x.clone(),
                residuals,
                jacobian,
                LmOptions {
                    max_iterations: 50,
                    rel_cost_tol: 1e-12,
                    initial_damping: 1e-3,
                },
            );
            x = report.params;
            let q = assemble(&x);
            let mut worst: f64 = 0.0;
            for k in 0..m {
                let c = cons.value(&q[k + 1]);
                lambdas[k] += c * rho;
                worst = worst.max(c.amax());
                let s = clearance_shortfall(arm, cfg, &q[k + 1]);
                worst = worst.max(s.iter().cloned().fold(0.0, f64::max));
            }
            log::debug!(
                "planner outer {outer_iterations}: rho {rho:.1e}, max violation {worst:.3e}"
            );
            if worst <= 0.01 * cfg.tolerance {
                break;
            }
            rho = (rho * 4.0).min(1e10);
        }
        let mut v = assemble(&x);
        for q in v.iter_mut().take(n - 1).skip(1) {
            *q = cons.project(q);
        }
        v
    };

    let trajectory = Trajectory::from_nodes(nodes);
    let certification = certify(&trajectory, arm, cfg, delta_s_rel);
    if !certification.passed {
        return Err(GripError::Planner(format!(
            "trajectory failed certification: {}",
            certification.summary()
        )));
    }
    Ok(PlanReport {
        cost: plan_cost(&trajectory.nodes, q_goal, cfg),
        trajectory,
        outer_iterations,
        certification,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub max_translation_residual_m: f64,
    pub max_orientation_deviation_rad: f64,
    pub max_limit_violation_rad: f64,
    pub min_clearance_m: f64,
    pub transitions_exact: bool,
    pub passed: bool,
}

impl CertificationReport {
    pub fn summary(&self) -> String {
        format!(
            "translation {:.3e} m, orientation {:.3e} rad, limits {:.3e} rad, clearance {:.4} m, exact transitions {}",
            self.max_translation_residual_m,
            self.max_orientation_deviation_rad,
            self.max_limit_violation_rad,
            self.min_clearance_m,
            self.transitions_exact
        )
    }
}

/// Spatial forward kinematics built from homogeneous rotations about x, kept
/// separate from the planar closed form used by the solver.
pub fn spatial_pad_pose(
    arm: &ArmModel,
    q: &JointVector,
    side: Side,
) -> (Vector3<f64>, Matrix3<f64>) {
    let b = arm.base(side);
    let mut p = Vector3::new(0.0, b.x, b.y);
    let mut r = Matrix3::identity();
    for i in 0..3 {
        r *= rot_x(q[side.offset() + i]);
        p += r * Vector3::new(0.0, arm.link_lengths_m[i], 0.0);
    }
    let mount = match side {
        Side::Left => rot_x(-std::f64::consts::PI) * pad_frame_at_zero_pitch(side),
        Side::Right => pad_frame_at_zero_pitch(side),
    };
    (p, r * mount)
}

fn rotation_angle(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let rel = a.transpose() * b;
    let s = Vector3::new(
        rel[(2, 1)] - rel[(1, 2)],
        rel[(0, 2)] - rel[(2, 0)],
        rel[(1, 0)] - rel[(0, 1)],
    )
    .norm()
        / 2.0;
    let c = (rel.trace() - 1.0) / 2.0;
    s.atan2(c)
}

/// Re-validates a trajectory with spatial FK, joint limits, clearance and the
/// bitwise transition identity.
pub fn certify(
    traj: &Trajectory,
    arm: &ArmModel,
    cfg: &PlannerConfig,
    delta_s_rel: f64,
) -> CertificationReport {
    let mut rep = CertificationReport {
        max_translation_residual_m: 0.0,
        max_orientation_deviation_rad: 0.0,
        max_limit_violation_rad: 0.0,
        min_clearance_m: f64::INFINITY,
        transitions_exact: traj.controls.len() + 1 == traj.nodes.len(),
        passed: false,
    };
    let Some(first) = traj.nodes.first() else {
        return rep;
    };
    let (_, rl0) = spatial_pad_pose(arm, first, Side::Left);
    let (_, rr0) = spatial_pad_pose(arm, first, Side::Right);
    let want = Vector3::new(0.0, delta_s_rel, 0.0);
    for (k, q) in traj.nodes.iter().enumerate() {
        let (pl, rl) = spatial_pad_pose(arm, q, Side::Left);
        let (pr, rr) = spatial_pad_pose(arm, q, Side::Right);
        rep.max_translation_residual_m =
            rep.max_translation_residual_m.max((pl - pr - want).norm());
        rep.max_orientation_deviation_rad = rep
            .max_orientation_deviation_rad
            .max(rotation_angle(&rl0, &rl))
            .max(rotation_angle(&rr0, &rr));
        rep.max_limit_violation_rad = rep.max_limit_violation_rad.max(arm.limit_violation(q));
        rep.min_clearance_m = rep.min_clearance_m.min(min_clearance(arm, cfg, q));
        if let Some(u) = traj.controls.get(k) {
            if q + u != traj.nodes[k + 1] {
                rep.transitions_exact = false;
            }
        }
    }
    rep.passed = rep.max_translation_residual_m <= cfg.tolerance
        && rep.max_orientation_deviation_rad <= cfg.tolerance
        && rep.max_limit_violation_rad <= 0.0
        && rep.min_clearance_m >= cfg.clearance_m - cfg.tolerance
        && rep.transitions_exact;
    rep
}
