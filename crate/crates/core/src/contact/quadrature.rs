//! Friction wrench for a rigid rotation about a given CoR.
//!
//! The disk is integrated on a polar grid centred at the CoR. Along each ray the
//! pressure is linear in the distance `ρ` from the CoR, so the radial integrals
//! are closed-form and only the angular direction needs quadrature:
//!
//! * CoR inside the disk: every ray leaves through the rim once; trapezoid in angle.
//! * CoR on or outside the rim: rays that hit the disk span a cone of half-angle
//!   `asin(R/|c|)`. The angle is reparametrised as `ψ = asin(R sin s / |c|)` so the
//!   chord half-length `R cos s` vanishes smoothly at both ends, and `s` is
//!   integrated with Gauss–Legendre. Chord integrals are written about the chord
//!   midpoint, which keeps far-away CoRs free of cancellation.

use nalgebra::Vector2;

use super::{FrictionWrench, PressureField};
use crate::error::{GripError, Result};
use crate::numeric::{gauss_legendre, pairwise_sum};

/// Angular node count of the base rule; the accuracy check doubles it.
pub const DEFAULT_ANGULAR_NODES: usize = 128;

/// Relative change on refinement above which a wrench is rejected.
pub const REFINEMENT_TOLERANCE: f64 = 1e-4;

fn perp(v: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

/// Sliding direction at `point` for a counterclockwise rotation about `cor`.
///
/// Returns `None` when the two coincide.
pub fn unit_velocity(point: &Vector2<f64>, cor: &Vector2<f64>) -> Option<Vector2<f64>> {
    let d = point - cor;
    let n = d.norm();
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    Some(perp(d / n))
}

/// Wrench with a fixed angular node count and no accuracy check.
pub fn friction_wrench_with_nodes(
    field: &PressureField,
    mu: f64,
    cor: &Vector2<f64>,
    nodes: usize,
) -> FrictionWrench {
    let r = field.radius_m;
    let dist = cor.norm();
    let mut fx = Vec::with_capacity(nodes);
    let mut fy = Vec::with_capacity(nodes);
    let mut tz = Vec::with_capacity(nodes);

    if dist < r {
        let p_c = field.pressure_at(cor);
        let dphi = std::f64::consts::TAU / nodes as f64;
        for k in 0..nodes {
            let phi = dphi * k as f64;
            let u = Vector2::new(phi.cos(), phi.sin());
            let cu = cor.dot(&u);
            let rho = -cu + (r * r - dist * dist + cu * cu).sqrt();
            let g = field.gradient * field.direction.dot(&u);
            let (r2, r3) = (rho * rho, rho * rho * rho);
            let i1 = p_c * r2 / 2.0 + g * r3 / 3.0;
            let i2 = p_c * r3 / 3.0 + g * r3 * rho / 4.0;
            let v = perp(u) * (i1 * dphi);
            fx.push(v.x);
            fy.push(v.y);
            tz.push((cu * i1 + i2) * dphi);
        }
    } else {
        let (s_nodes, s_weights) = gauss_legendre(nodes);
        let phi0 = (-cor.y).atan2(-cor.x);
        let half_pi = std::f64::consts::FRAC_PI_2;
        for (x, w) in s_nodes.iter().zip(&s_weights) {
            let s = half_pi * x;
            let (sin_s, cos_s) = s.sin_cos();
            let psi = (r * sin_s / dist).clamp(-1.0, 1.0).asin();
            let cos_psi = psi.cos();
            if cos_psi <= 0.0 {
                continue;
            }
            let phi = phi0 + psi;
            let u = Vector2::new(phi.cos(), phi.sin());
            let rho_m = dist * cos_psi;
            let h = r * cos_s;
            let mid = cor + u * rho_m;
            let p_m = field.pressure_at(&mid);
            let g = field.gradient * field.direction.dot(&u);
            let i1 = 2.0 * h * (p_m * rho_m + g * h * h / 3.0);
            let j = 2.0 * h * h * h / 3.0 * (p_m + g * rho_m);
            let weight = half_pi * w * r * cos_s / (dist * cos_psi);
            let v = perp(u) * (i1 * weight);
            fx.push(v.x);
            fy.push(v.y);
            tz.push(j * weight);
        }
    }

    FrictionWrench {
        force: Vector2::new(-mu * pairwise_sum(&fx), -mu * pairwise_sum(&fy)),
        torque: -mu * pairwise_sum(&tz),
    }
}

/// Friction wrench `(−∫μ p v̂ dS, −∫ μ p (r × v̂) dS)` for a counterclockwise
/// rotation about `cor`, checked by doubling the node count.
pub fn friction_wrench_at_cor(
    field: &PressureField,
    mu: f64,
    cor: &Vector2<f64>,
) -> Result<FrictionWrench> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(GripError::InvalidParameter(format!(
            "friction coefficient {mu}"
        )));
    }
    if !(cor.x.is_finite() && cor.y.is_finite()) {
        return Err(GripError::InvalidParameter("non-finite CoR".into()));
    }
    let coarse = friction_wrench_with_nodes(field, mu, cor, DEFAULT_ANGULAR_NODES);
    let fine = friction_wrench_with_nodes(field, mu, cor, 2 * DEFAULT_ANGULAR_NODES);
    let f_scale = mu * field.normal_force();
    if f_scale == 0.0 {
        return Ok(fine);
    }
    let rel_change = ((fine.force - coarse.force).norm() / f_scale)
        .max((fine.torque - coarse.torque).abs() / (f_scale * field.radius_m));
    if !rel_change.is_finite() || rel_change > REFINEMENT_TOLERANCE {
        return Err(GripError::Accuracy { rel_change });
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Pad-centred Gauss–Legendre (radius) × trapezoid (angle) rule, evaluated
    /// pointwise with the singular point skipped.
    fn pad_grid_oracle(field: &PressureField, mu: f64, cor: &Vector2<f64>) -> FrictionWrench {
        let (nr, nt) = (32, 128);
        let (xs, ws) = gauss_legendre(nr);
        let r = field.radius_m;
        let dt = std::f64::consts::TAU / nt as f64;
        let mut f = Vector2::zeros();
        let mut t = 0.0;
        for (x, w) in xs.iter().zip(&ws) {
            let rho = 0.5 * r * (x + 1.0);
            let wr = 0.5 * r * w * rho;
            for k in 0..nt {
                let th = dt * k as f64;
                let p = Vector2::new(rho * th.cos(), rho * th.sin());
                let Some(v) = unit_velocity(&p, cor) else {
                    continue;
                };
                let pr = field.pressure_at(&p) * wr * dt;
                f -= v * (mu * pr);
                t -= (p.x * v.y - p.y * v.x) * mu * pr;
            }
        }
        FrictionWrench {
            force: f,
            torque: t,
        }
    }

    #[test]
    fn unit_velocity_examples() {
        let o = Vector2::zeros();
        assert_eq!(
            unit_velocity(&Vector2::new(1.0, 0.0), &o),
            Some(Vector2::new(0.0, 1.0))
        );
        let v = unit_velocity(&Vector2::new(0.0, 1.0), &o).unwrap();
        assert!((v - Vector2::new(-1.0, 0.0)).norm() < 1e-16);
        assert_eq!(unit_velocity(&o, &o), None);
    }

    #[test]
    fn uniform_center_is_pure_torque() {
        let field = PressureField::uniform(2.0, 0.03).unwrap();
        let w = friction_wrench_at_cor(&field, 0.5, &Vector2::zeros()).unwrap();
        assert!(w.force.norm() < 1e-14);
        let expected = 2.0 * 0.5 * 2.0 * 0.03 / 3.0;
        assert!((w.torque.abs() - expected).abs() < 1e-12 * expected);
        // counterclockwise motion is resisted by clockwise friction
        assert!(w.torque < 0.0);
    }

    #[test]
    fn far_cor_is_pure_translation() {
        let field = PressureField::uniform(2.0, 0.03).unwrap();
        let w = friction_wrench_at_cor(&field, 0.5, &Vector2::new(30.0, 0.0)).unwrap();
        assert!((w.force.norm() - 1.0).abs() < 5e-3);
        assert!(w.torque.abs() < 1e-3 * 1.0 * 0.03);
    }

    #[test]
    fn matches_pad_grid_oracle() {
        let field = PressureField::with_cop(3.0, Vector2::new(0.004, -0.002), 0.03).unwrap();
        for cor in [
            Vector2::new(0.0, 0.0),
            Vector2::new(0.011, 0.007),
            Vector2::new(-0.05, 0.02),
            Vector2::new(0.3, -0.1),
        ] {
            let a = friction_wrench_at_cor(&field, 0.7, &cor).unwrap();
            let b = pad_grid_oracle(&field, 0.7, &cor);
            let scale = 0.7 * 3.0;
            assert!((a.force - b.force).norm() < 2e-3 * scale, "{cor:?}");
            assert!((a.torque - b.torque).abs() < 2e-3 * scale * 0.03, "{cor:?}");
        }
    }

    #[test]
    fn rim_cor_is_continuous() {
        let field = PressureField::with_cop(2.0, Vector2::new(0.005, 0.0), 0.03).unwrap();
        let on = friction_wrench_at_cor(&field, 0.5, &Vector2::new(0.0, 0.03)).unwrap();
        let inside = friction_wrench_at_cor(&field, 0.5, &Vector2::new(0.0, 0.03 - 1e-9)).unwrap();
        let outside = friction_wrench_at_cor(&field, 0.5, &Vector2::new(0.0, 0.03 + 1e-9)).unwrap();
        assert!((on.force - inside.force).norm() < 1e-6);
        assert!((on.force - outside.force).norm() < 1e-6);
        assert!((on.torque - outside.torque).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_mu() {
        let field = PressureField::uniform(1.0, 0.03).unwrap();
        assert!(friction_wrench_at_cor(&field, 0.0, &Vector2::zeros()).is_err());
        assert!(friction_wrench_at_cor(&field, f64::NAN, &Vector2::zeros()).is_err());
    }

    proptest! {
        #[test]
        fn scales_linearly_in_mu_and_force(
            fnorm in 0.5f64..5.0,
            mu in 0.2f64..1.0,
            lambda in 0.5f64..4.0,
            cx in -0.1f64..0.1,
            cy in -0.1f64..0.1,
            frac in 0.0f64..0.25,
        ) {
            let r = 0.03;
            let cop = Vector2::new(frac * r, 0.0);
            let cor = Vector2::new(cx, cy);
            let base = friction_wrench_at_cor(&PressureField::with_cop(fnorm, cop, r).unwrap(), mu, &cor).unwrap();
            let by_mu = friction_wrench_at_cor(&PressureField::with_cop(fnorm, cop, r).unwrap(), lambda * mu, &cor).unwrap();
            let by_f = friction_wrench_at_cor(&PressureField::with_cop(lambda * fnorm, cop, r).unwrap(), mu, &cor).unwrap();
            let fs = mu * fnorm * lambda;
            for w in [by_mu, by_f] {
                prop_assert!((w.force - base.force * lambda).norm() <= 1e-9 * fs);
                prop_assert!((w.torque - base.torque * lambda).abs() <= 1e-9 * fs * r);
            }
        }

        #[test]
        fn tangential_force_never_exceeds_coulomb(
            cx in -1.0f64..1.0,
            cy in -1.0f64..1.0,
            frac in 0.0f64..0.25,
        ) {
            let field = PressureField::with_cop(2.0, Vector2::new(0.0, frac * 0.03), 0.03).unwrap();
            let w = friction_wrench_at_cor(&field, 0.5, &Vector2::new(cx, cy)).unwrap();
            prop_assert!(w.force.norm() <= 1.0 * (1.0 + 1e-12));
        }
    }
}
