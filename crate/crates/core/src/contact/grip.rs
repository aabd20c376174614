//! Closed-form points on the limit curve and the grip-force laws built on them.
//!
//! Points are given in the (tangential force, torque) plane with the virtual CoP
//! on the +x axis of the pad at distance `P`.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::MAX_OFFSET_FRACTION;
use crate::error::{GripError, Result};

/// Clamps `|P|` into `[0, R/4]`, warning when the bound bites.
fn clamp_offset(offset_m: f64, radius_m: f64) -> (f64, bool) {
    let limit = MAX_OFFSET_FRACTION * radius_m;
    let p = offset_m.abs();
    if p > limit {
        log::warn!(
            "CoP offset {:.3} mm exceeds R/4 = {:.3} mm; clamped",
            p * 1e3,
            limit * 1e3
        );
        (limit, true)
    } else {
        (p, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampedOffset {
    /// Pressure gradient `a` (N/m³).
    pub gradient: f64,
    /// Offset actually used (m).
    pub offset_m: f64,
    pub clamped: bool,
}

/// Pressure gradient that puts the CoP of a linear field at distance `P`:
/// `a = 4 f_n |P| / (π R⁴)`.
pub fn gradient_coefficient(normal_force_n: f64, offset_m: f64, radius_m: f64) -> ClampedOffset {
    let (p, clamped) = clamp_offset(offset_m, radius_m);
    ClampedOffset {
        gradient: 4.0 * normal_force_n * p / (std::f64::consts::PI * radius_m.powi(4)),
        offset_m: p,
        clamped,
    }
}

/// Largest tangential friction force, `μ f_n cos θ`; `θ` is the residual pad tilt.
pub fn max_tangential_force(mu: f64, normal_force_n: f64, tilt_rad: f64) -> f64 {
    mu * normal_force_n * tilt_rad.cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticPoints {
    /// Pure-translation end: `(μ f_n, P μ f_n)`.
    pub a_n: Vector2<f64>,
    /// Rotation about the pad centre: `(4 μ f_n P / (3R), 2 μ f_n R / 3)`.
    pub d_i: Vector2<f64>,
    /// Torque-axis intercept of the line through `A_n` and `D_I`.
    pub b_n: Vector2<f64>,
    pub offset_m: f64,
    pub clamped: bool,
}

/// Torque intercept per unit `μ f_n`: `β = (2R² − 4P²) / (3R − 4P)`.
fn intercept_factor(radius_m: f64, p: f64) -> f64 {
    (2.0 * radius_m * radius_m - 4.0 * p * p) / (3.0 * radius_m - 4.0 * p)
}

pub fn analytic_points(
    mu: f64,
    normal_force_n: f64,
    radius_m: f64,
    offset_m: f64,
) -> AnalyticPoints {
    let (p, clamped) = clamp_offset(offset_m, radius_m);
    let mf = mu * normal_force_n;
    AnalyticPoints {
        a_n: Vector2::new(mf, p * mf),
        d_i: Vector2::new(4.0 * mf * p / (3.0 * radius_m), 2.0 * mf * radius_m / 3.0),
        b_n: Vector2::new(0.0, mf * intercept_factor(radius_m, p)),
        offset_m: p,
        clamped,
    }
}

fn check_inputs(f_g: f64, tau_g: f64, mu: f64, radius_m: f64) -> Result<()> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(GripError::Infeasible(format!(
            "friction coefficient must be positive, got {mu}"
        )));
    }
    if !(radius_m.is_finite() && radius_m > 0.0) {
        return Err(GripError::InvalidParameter(format!(
            "pad radius {radius_m}"
        )));
    }
    if !(f_g.is_finite() && f_g >= 0.0 && tau_g.is_finite() && tau_g >= 0.0) {
        return Err(GripError::InvalidParameter(format!(
            "gravity wrench must be finite and nonnegative, got ({f_g}, {tau_g})"
        )));
    }
    Ok(())
}

/// Normal force that puts `(f_g, τ_g)` on the control line of a centred CoP:
/// `f_n = f_g/μ + 3τ_g/(2μR)`.
pub fn required_grip_force(f_g: f64, tau_g: f64, mu: f64, radius_m: f64) -> Result<f64> {
    check_inputs(f_g, tau_g, mu, radius_m)?;
    Ok(f_g / mu + 3.0 * tau_g / (2.0 * mu * radius_m))
}

/// Smallest normal force for which `(f_g, τ_g)` lies on or below the segment
/// `A_n B_n` of a field whose CoP sits at distance `P` from the centre.
///
/// The result never drops below the Coulomb bound `f_g/μ`.
pub fn required_grip_force_offset(
    f_g: f64,
    tau_g: f64,
    mu: f64,
    radius_m: f64,
    offset_m: f64,
) -> Result<f64> {
    check_inputs(f_g, tau_g, mu, radius_m)?;
    let (p, _) = clamp_offset(offset_m, radius_m);
    if p == 0.0 {
        return required_grip_force(f_g, tau_g, mu, radius_m);
    }
    let beta = intercept_factor(radius_m, p);
    if !(beta.is_finite() && beta > 0.0) {
        return Err(GripError::Infeasible(format!(
            "degenerate control line at offset {p}"
        )));
    }
    // Line through (μf_n, Pμf_n) and (0, βμf_n): τ = βμf_n + (P − β) f.
    let line = f_g / mu + (tau_g - p * f_g) / (beta * mu);
    Ok(line.max(f_g / mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gradient_examples() {
        assert_eq!(gradient_coefficient(2.0, 0.0, 0.03).gradient, 0.0);
        let a = gradient_coefficient(2.0, 0.005, 0.03).gradient;
        assert!((a - 4.0 * 2.0 * 0.005 / (std::f64::consts::PI * 8.1e-7)).abs() < 1e-9);
        assert!((a - 15_719.0).abs() < 1.0);
        let c = gradient_coefficient(2.0, 0.02, 0.03);
        assert!(c.clamped && c.offset_m == 0.0075);
    }

    #[test]
    fn coulomb_bound() {
        assert_eq!(max_tangential_force(0.5, 2.0, 0.0), 1.0);
        let half = max_tangential_force(0.5, 2.0, 60f64.to_radians());
        assert!((half - 0.5).abs() < 1e-15);
    }

    #[test]
    fn intercept_at_zero_offset_equals_peak_torque() {
        let pts = analytic_points(0.5, 2.0, 0.03, 0.0);
        assert!((pts.b_n.y - pts.d_i.y).abs() <= 1e-15 * pts.d_i.y);
        assert!((pts.d_i.y - 2.0 * 0.5 * 2.0 * 0.03 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn intercept_arithmetic() {
        let pts = analytic_points(0.5, 2.0, 0.03, 0.005);
        let expected = 2.0 * 0.5 * 2.0 * (2.0 * 25e-6 - 9e-4) / (0.02 - 0.09);
        assert!((pts.b_n.y - expected).abs() < 1e-15);
        assert!((pts.b_n.y - 0.024286).abs() < 1e-6);
        // the slope of O→A_n is the offset itself
        assert!((pts.a_n.y / pts.a_n.x - 0.005).abs() < 1e-15);
    }

    #[test]
    fn b_n_is_on_line_a_n_d_i() {
        let pts = analytic_points(0.7, 3.0, 0.04, 0.008);
        let d1 = pts.d_i - pts.a_n;
        let d2 = pts.b_n - pts.a_n;
        assert!((d1.x * d2.y - d1.y * d2.x).abs() < 1e-12);
    }

    #[test]
    fn grip_force_examples() {
        assert_eq!(required_grip_force(1.0, 0.0, 0.5, 0.03).unwrap(), 2.0);
        assert!((required_grip_force(1.0, 0.01, 0.5, 0.03).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(
            required_grip_force(1.0, 0.0, 0.0, 0.03),
            Err(GripError::Infeasible(_))
        ));
        assert_eq!(
            required_grip_force_offset(0.7, 0.004, 0.5, 0.03, 0.0).unwrap(),
            required_grip_force(0.7, 0.004, 0.5, 0.03).unwrap()
        );
    }

    #[test]
    fn grip_force_puts_wrench_on_control_line() {
        let (fg, tg, mu, r) = (0.8, 0.006, 0.6, 0.03);
        let fnorm = required_grip_force(fg, tg, mu, r).unwrap();
        let pts = analytic_points(mu, fnorm, r, 0.0);
        let d = pts.b_n - pts.a_n;
        let e = Vector2::new(fg, tg) - pts.a_n;
        assert!((d.x * e.y - d.y * e.x).abs() < 1e-12);
    }

    #[test]
    fn offset_law_is_continuous_at_zero() {
        let a = required_grip_force_offset(0.7, 0.004, 0.5, 0.03, 0.0).unwrap();
        let b = required_grip_force_offset(0.7, 0.004, 0.5, 0.03, 1e-12).unwrap();
        assert!((a - b).abs() < 1e-8 * a);
    }

    proptest! {
        #[test]
        fn offset_law_monotone_in_torque(
            fg in 0.0f64..3.0, t1 in 0.0f64..0.05, dt in 0.0f64..0.05,
            mu in 0.2f64..1.0, p in 0.0f64..0.0075,
        ) {
            let a = required_grip_force_offset(fg, t1, mu, 0.03, p).unwrap();
            let b = required_grip_force_offset(fg, t1 + dt, mu, 0.03, p).unwrap();
            prop_assert!(b >= a);
        }

        #[test]
        fn offset_law_monotone_in_force(
            f1 in 0.0f64..3.0, df in 0.0f64..3.0, tg in 0.0f64..0.05,
            mu in 0.2f64..1.0, p in 0.0f64..0.0075,
        ) {
            let a = required_grip_force_offset(f1, tg, mu, 0.03, p).unwrap();
            let b = required_grip_force_offset(f1 + df, tg, mu, 0.03, p).unwrap();
            prop_assert!(b >= a * (1.0 - 1e-15));
        }
    }
}
