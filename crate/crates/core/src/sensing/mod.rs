//! Normal force and center-of-pressure sensing from three 1-D load cells.
//!
//! All points are expressed in the pad frame: origin at the pad's geometric
//! center, z along the pad normal, so every point here is a 2-vector.

mod calibration;

pub use calibration::{
    fit_affine, fit_cop_correction, mean_cop_error, AffineFit, CopCorrectionParams, CopFit,
    LoadCellCalibration,
};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{GripError, Result};

/// Standard gravity used to turn calibration masses into forces (m/s²).
pub const GRAVITY: f64 = 9.81;

/// Calibration masses placed on every hole of the plate (kg).
pub const CALIBRATION_LOADS_KG: [f64; 3] = [0.2, 0.5, 1.0];

/// Pad layout: disk radius, the three load-cell positions and the calibration holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PadGeometry {
    pub radius_m: f64,
    pub sensor_positions_m: [Vector2<f64>; 3],
    pub calibration_holes_m: Vec<Vector2<f64>>,
}

impl PadGeometry {
    pub fn new(
        radius_m: f64,
        sensor_positions_m: [Vector2<f64>; 3],
        calibration_holes_m: Vec<Vector2<f64>>,
    ) -> Result<Self> {
        let g = Self {
            radius_m,
            sensor_positions_m,
            calibration_holes_m,
        };
        g.validate()?;
        Ok(g)
    }

    /// Three sensors on a circle of `0.8 R` at 120° spacing (first one on +x), and
    /// 19 holes: the center, 6 holes on a ring of `R/12` and 12 on a ring of `R/6`.
    ///
    /// The hole rings are offset by 30° and 15° so no hole sits on a boundary
    /// between two sensors' nearest-neighbour regions.
    pub fn with_radius(radius_m: f64) -> Self {
        let ring = 0.8 * radius_m;
        let sensors = [0.0f64, 120.0, 240.0].map(|deg| {
            let a = deg.to_radians();
            Vector2::new(ring * a.cos(), ring * a.sin())
        });
        let mut holes = vec![Vector2::zeros()];
        for k in 0..6 {
            let a = (30.0 + 60.0 * k as f64).to_radians();
            holes.push(Vector2::new(a.cos(), a.sin()) * (radius_m / 12.0));
        }
        for k in 0..12 {
            let a = (15.0 + 30.0 * k as f64).to_radians();
            holes.push(Vector2::new(a.cos(), a.sin()) * (radius_m / 6.0));
        }
        Self {
            radius_m,
            sensor_positions_m: sensors,
            calibration_holes_m: holes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius_m.is_finite() && self.radius_m > 0.0) {
            return Err(GripError::InvalidParameter(format!(
                "pad radius must be positive, got {}",
                self.radius_m
            )));
        }
        let [s1, s2, s3] = self.sensor_positions_m;
        let area2 = (s2 - s1).perp(&(s3 - s1));
        if area2.abs() <= 1e-12 * self.radius_m * self.radius_m {
            return Err(GripError::InvalidParameter(
                "sensor positions are collinear or coincident".into(),
            ));
        }
        let eps = 1e-12 * self.radius_m;
        for p in self
            .sensor_positions_m
            .iter()
            .chain(&self.calibration_holes_m)
        {
            if p.norm() > self.radius_m + eps {
                return Err(GripError::InvalidParameter(format!(
                    "point ({:.4}, {:.4}) lies outside the pad disk",
                    p.x, p.y
                )));
            }
        }
        Ok(())
    }

    /// Barycentric coordinates of `p` with respect to the sensor triangle.
    pub fn barycentric(&self, p: &Vector2<f64>) -> [f64; 3] {
        let [s1, s2, s3] = self.sensor_positions_m;
        let det = (s2 - s1).perp(&(s3 - s1));
        let w2 = (p - s1).perp(&(s3 - s1)) / det;
        let w3 = (s2 - s1).perp(&(p - s1)) / det;
        [1.0 - w2 - w3, w2, w3]
    }

    pub fn sensor_centroid(&self) -> Vector2<f64> {
        self.sensor_positions_m.iter().sum::<Vector2<f64>>() / 3.0
    }
}

impl Default for PadGeometry {
    fn default() -> Self {
        Self::with_radius(0.03)
    }
}

/// One processed sample from a pad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PadMeasurement {
    pub forces_n: [f64; 3],
    pub normal_force_n: f64,
    pub raw_cop_m: Vector2<f64>,
    pub corrected_cop_m: Vector2<f64>,
}

impl PadMeasurement {
    /// Runs force sum, CoP and CoP correction on three load-cell forces.
    pub fn from_forces(
        forces_n: [f64; 3],
        geometry: &PadGeometry,
        correction: &CopCorrectionParams,
    ) -> Result<Self> {
        let normal_force_n = compute_normal_force(forces_n)?;
        let raw_cop_m = compute_cop(forces_n, geometry)?;
        let corrected_cop_m = correct_cop(&raw_cop_m, correction, geometry);
        Ok(Self {
            forces_n,
            normal_force_n,
            raw_cop_m,
            corrected_cop_m,
        })
    }
}

/// Total normal force: the sum of the three cell readings.
pub fn compute_normal_force(forces_n: [f64; 3]) -> Result<f64> {
    if let Some(bad) = forces_n.iter().find(|f| !f.is_finite()) {
        return Err(GripError::InvalidMeasurement(format!(
            "non-finite load-cell force {bad}"
        )));
    }
    Ok(forces_n.iter().sum())
}

/// Point of zero in-plane moment: `Σ‖f_i‖ s_i / Σ‖f_i‖`.
pub fn compute_cop(forces_n: [f64; 3], geometry: &PadGeometry) -> Result<Vector2<f64>> {
    if forces_n.iter().any(|f| !f.is_finite()) {
        return Err(GripError::InvalidMeasurement(
            "non-finite load-cell force".into(),
        ));
    }
    let total: f64 = forces_n.iter().map(|f| f.abs()).sum();
    if total == 0.0 {
        return Err(GripError::UndefinedCop);
    }
    let weighted = forces_n
        .iter()
        .zip(&geometry.sensor_positions_m)
        .fold(Vector2::zeros(), |acc, (f, s)| acc + s * f.abs());
    Ok(weighted / total)
}

/// Per-sensor distance `d_i` and unit vector `v_i` from `p` toward sensor `i`.
///
/// A point coincident with a sensor gets a zero unit vector for that sensor.
pub(crate) fn sensor_rays(p: &Vector2<f64>, geometry: &PadGeometry) -> [(f64, Vector2<f64>); 3] {
    geometry.sensor_positions_m.map(|s| {
        let d = s - p;
        let dist = d.norm();
        if dist <= 1e-15 * geometry.radius_m {
            (0.0, Vector2::zeros())
        } else {
            (dist, d / dist)
        }
    })
}

/// Applies the per-sensor polynomial correction to a raw CoP.
///
/// `Δx = Σ_i Σ_j a_ij d_i^j v_i,x` (and `b` for y), with `j = 0, 1, 2`.
pub fn correct_cop(
    raw: &Vector2<f64>,
    params: &CopCorrectionParams,
    geometry: &PadGeometry,
) -> Vector2<f64> {
    let rays = sensor_rays(raw, geometry);
    let mut delta = Vector2::zeros();
    for (i, (d, v)) in rays.iter().enumerate() {
        let powers = [1.0, *d, d * d];
        for (j, pw) in powers.iter().enumerate() {
            delta.x += params.a[i][j] * pw * v.x;
            delta.y += params.b[i][j] * pw * v.y;
        }
    }
    raw + delta
}
