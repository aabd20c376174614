use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::{analytic_points, friction_wrench_at_cor, PressureField};
use crate::error::{GripError, Result};

/// Innermost and outermost CoR distances of the sweep, in pad radii.
const SWEEP_MIN_RADII: f64 = 1e-3;
const SWEEP_MAX_RADII: f64 = 1e3;

/// Relative half-width of the band classified as [`SlipClass::On`].
pub const ON_BAND: f64 = 1e-3;

/// Boundary of the set of (tangential load, torque) pairs the pad can hold.
///
/// `samples` is the upper arc, produced by counterclockwise rotations about CoRs
/// swept along the pad's x axis from `−10³R` to `+10³R`. The virtual CoP sits on
/// `+x`, so the arc runs from near `A_n` through `D_I` to near `−A_n`. The full
/// closed curve is the arc together with its point reflection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCurve {
    pub samples: Vec<Vector2<f64>>,
    pub cor_positions_m: Vec<f64>,
    pub mu: f64,
    pub normal_force_n: f64,
    pub radius_m: f64,
    pub offset_m: f64,
    pub f_max: f64,
    pub a_n: Vector2<f64>,
    pub d_i: Vector2<f64>,
    pub b_n: Vector2<f64>,
    /// Torque where the arc crosses zero tangential load (quadrature estimate).
    pub c_i: Option<f64>,
}

impl LimitCurve {
    /// Closed polygon: the arc followed by its point reflection.
    pub fn closed_boundary(&self) -> Vec<Vector2<f64>> {
        self.samples
            .iter()
            .copied()
            .chain(self.samples.iter().map(|s| -s))
            .collect()
    }

    /// Peak torque over the sampled arc.
    pub fn tau_max(&self) -> f64 {
        self.samples.iter().map(|s| s.y).fold(f64::MIN, f64::max)
    }

    /// Distance from the origin to the boundary along `dir`, in normalized
    /// coordinates `(f / μf_n, τ / μf_n R)`. `None` for a degenerate curve.
    fn boundary_radius(&self, dir: Vector2<f64>) -> Option<f64> {
        let fs = self.mu * self.normal_force_n;
        if fs == 0.0 {
            return None;
        }
        let ts = fs * self.radius_m;
        let pts: Vec<Vector2<f64>> = self
            .closed_boundary()
            .iter()
            .map(|p| Vector2::new(p.x / fs, p.y / ts))
            .collect();
        let mut best: Option<f64> = None;
        for k in 0..pts.len() {
            let p = pts[k];
            let q = pts[(k + 1) % pts.len()];
            let e = q - p;
            // t·dir = p + s·e
            let den = dir.x * (-e.y) - dir.y * (-e.x);
            if den.abs() < 1e-300 {
                continue;
            }
            let t = (p.x * (-e.y) - p.y * (-e.x)) / den;
            let s = (dir.x * p.y - dir.y * p.x) / den;
            if (-1e-12..=1.0 + 1e-12).contains(&s) && t > 0.0 {
                best = Some(best.map_or(t, |b: f64| b.max(t)));
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlipClass {
    Inside,
    On,
    Outside,
}

/// Samples the limit curve of `field` with `n_cors ≥ 32` CoR positions.
///
/// Only the field's gradient magnitude matters: the curve is computed with the CoP
/// rotated onto `+x`.
pub fn limit_curve(field: &PressureField, mu: f64, n_cors: usize) -> Result<LimitCurve> {
    if n_cors < 32 {
        return Err(GripError::InvalidParameter(format!(
            "limit curve needs at least 32 CoR samples, got {n_cors}"
        )));
    }
    let aligned = field.aligned_to_x();
    let r = field.radius_m;
    let per_side = n_cors / 2;
    let step = (SWEEP_MAX_RADII / SWEEP_MIN_RADII).log10() / (per_side - 1) as f64;
    let magnitudes: Vec<f64> = (0..per_side)
        .map(|i| r * SWEEP_MIN_RADII * 10f64.powf(step * i as f64))
        .collect();
    let cors: Vec<f64> = magnitudes
        .iter()
        .rev()
        .map(|m| -m)
        .chain(std::iter::once(0.0))
        .chain(magnitudes.iter().copied())
        .collect();

    let mut samples = Vec::with_capacity(cors.len());
    for &x in &cors {
        let w = friction_wrench_at_cor(&aligned, mu, &Vector2::new(x, 0.0))?;
        // applied load is the negated friction; the x component vanishes by symmetry
        samples.push(Vector2::new(-w.force.y, -w.torque));
    }

    let fnorm = field.normal_force();
    let offset = aligned.cop().x;
    let pts = analytic_points(mu, fnorm, r, offset);
    let c_i = samples.windows(2).find_map(|w| {
        let (p, q) = (w[0], w[1]);
        if p.x >= 0.0 && q.x <= 0.0 && p.x != q.x {
            let s = p.x / (p.x - q.x);
            Some(p.y + s * (q.y - p.y))
        } else {
            None
        }
    });
    Ok(LimitCurve {
        samples,
        cor_positions_m: cors,
        mu,
        normal_force_n: fnorm,
        radius_m: r,
        offset_m: offset,
        f_max: mu * fnorm,
        a_n: pts.a_n,
        d_i: pts.d_i,
        b_n: pts.b_n,
        c_i,
    })
}

/// Radial containment test of the load `(f, τ)` against the sampled boundary.
pub fn check_slip(wrench: Vector2<f64>, curve: &LimitCurve) -> SlipClass {
    let fs = curve.mu * curve.normal_force_n;
    if wrench.x == 0.0 && wrench.y == 0.0 {
        return SlipClass::Inside;
    }
    if fs == 0.0 {
        return SlipClass::Outside;
    }
    let w = Vector2::new(wrench.x / fs, wrench.y / (fs * curve.radius_m));
    let len = w.norm();
    let Some(rb) = curve.boundary_radius(w / len) else {
        return SlipClass::Outside;
    };
    let ratio = len / rb;
    if ratio < 1.0 - ON_BAND {
        SlipClass::Inside
    } else if ratio > 1.0 + ON_BAND {
        SlipClass::Outside
    } else {
        SlipClass::On
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_curve() -> LimitCurve {
        limit_curve(&PressureField::uniform(2.0, 0.03).unwrap(), 0.5, 64).unwrap()
    }

    #[test]
    fn rejects_too_few_cors() {
        let f = PressureField::uniform(2.0, 0.03).unwrap();
        assert!(limit_curve(&f, 0.5, 31).is_err());
    }

    #[test]
    fn uniform_curve_is_symmetric_with_peak_at_center() {
        let c = uniform_curve();
        let n = c.samples.len();
        for i in 0..n {
            let a = c.samples[i];
            let b = c.samples[n - 1 - i];
            assert!((a.x + b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-14);
        }
        let peak = 2.0 * 0.5 * 2.0 * 0.03 / 3.0;
        assert!((c.tau_max() - peak).abs() < 1e-12 * peak);
        assert!((c.c_i.unwrap() - peak).abs() < 1e-12 * peak);
        assert!((c.samples[0].x - c.f_max).abs() < 5e-3 * c.f_max);
    }

    #[test]
    fn endpoints_follow_offset_slope() {
        let f = PressureField::with_cop(2.0, Vector2::new(0.0, 0.006), 0.03).unwrap();
        let c = limit_curve(&f, 0.5, 64).unwrap();
        let first = c.samples[0];
        assert!((first.x - 1.0).abs() < 5e-3);
        assert!((first.y / first.x - 0.006).abs() < 1e-4);
        assert!((c.offset_m - 0.006).abs() < 1e-15);
    }

    #[test]
    fn slip_classification() {
        let c = uniform_curve();
        assert_eq!(check_slip(Vector2::zeros(), &c), SlipClass::Inside);
        assert_eq!(
            check_slip(Vector2::new(1.0 + 1e-2, 0.0), &c),
            SlipClass::Outside
        );
        for s in &c.samples {
            assert_eq!(check_slip(*s, &c), SlipClass::On);
            assert_eq!(check_slip(*s * 0.99, &c), SlipClass::Inside);
            assert_eq!(check_slip(*s * 1.01, &c), SlipClass::Outside);
        }
    }
}
