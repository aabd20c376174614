//! Synthetic calibration sessions: every hole of the pad loaded with every mass.

use nalgebra::Vector2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pad::{synth_readings, SensorDistortion};
use crate::contact::{ContactMode, ContactState};
use crate::error::Result;
use crate::sensing::{compute_cop, PadGeometry, CALIBRATION_LOADS_KG, GRAVITY};

/// One loaded hole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub hole: usize,
    pub load_kg: f64,
    pub forces_n: [f64; 3],
    pub truth_m: Vector2<f64>,
}

/// Readings for every hole and calibration mass, in hole-major order.
pub fn synthetic_calibration_dataset(
    geometry: &PadGeometry,
    distortion: &SensorDistortion,
    noise_sigma_n: f64,
    seed: u64,
) -> Result<Vec<CalibrationSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out =
        Vec::with_capacity(geometry.calibration_holes_m.len() * CALIBRATION_LOADS_KG.len());
    for (hole, truth) in geometry.calibration_holes_m.iter().enumerate() {
        for load_kg in CALIBRATION_LOADS_KG {
            let state = ContactState {
                mode: ContactMode::FullContact,
                tilt_rad: 0.0,
                cop_offset_m: *truth,
            };
            let r = synth_readings(
                &state,
                load_kg * GRAVITY,
                geometry,
                distortion,
                noise_sigma_n,
                &mut rng,
            )?;
            out.push(CalibrationSample {
                hole,
                load_kg,
                forces_n: r.forces_n,
                truth_m: *truth,
            });
        }
    }
    Ok(out)
}

/// `(raw CoP, ground truth)` pairs ready for the correction fit.
pub fn cop_pairs(
    samples: &[CalibrationSample],
    geometry: &PadGeometry,
) -> Result<Vec<(Vector2<f64>, Vector2<f64>)>> {
    samples
        .iter()
        .map(|s| Ok((compute_cop(s.forces_n, geometry)?, s.truth_m)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::{fit_cop_correction, mean_cop_error, CopCorrectionParams};

    #[test]
    fn dataset_shape_and_determinism() {
        let g = PadGeometry::default();
        let a = synthetic_calibration_dataset(&g, &SensorDistortion::CALIBRATION_STUDY, 0.01, 7)
            .unwrap();
        let b = synthetic_calibration_dataset(&g, &SensorDistortion::CALIBRATION_STUDY, 0.01, 7)
            .unwrap();
        assert_eq!(a.len(), 57);
        assert_eq!(a, b);
    }

    #[test]
    fn fit_recovers_distorted_grid() {
        let g = PadGeometry::default();
        let data = synthetic_calibration_dataset(&g, &SensorDistortion::CALIBRATION_STUDY, 0.01, 1)
            .unwrap();
        let pairs = cop_pairs(&data, &g).unwrap();
        let before = mean_cop_error(&pairs, &CopCorrectionParams::default(), &g);
        let fit = fit_cop_correction(&pairs, &g).unwrap();
        let after = mean_cop_error(&pairs, &fit.params, &g);
        assert!(before >= 4e-3, "{before}");
        assert!(after <= 1.5e-3, "{after}");
        assert!(before >= 4.0 * after);
        assert!(!fit.underdetermined);
    }
}
