use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};

use super::{correct_cop, sensor_rays, PadGeometry};
use crate::error::{GripError, Result};
use crate::numeric::{levenberg_marquardt, numerical_rank, LmOptions};

/// Affine voltage-to-force map `f = c·S + d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadCellCalibration {
    /// Newtons per volt.
    pub scale: f64,
    /// Newtons.
    pub offset: f64,
}

impl LoadCellCalibration {
    pub fn new(scale: f64, offset: f64) -> Result<Self> {
        if !scale.is_finite() || scale == 0.0 || !offset.is_finite() {
            return Err(GripError::InvalidParameter(format!(
                "load-cell scale must be finite and nonzero (got {scale}, offset {offset})"
            )));
        }
        Ok(Self { scale, offset })
    }

    /// From the unloaded reading `s0` and the reading `sg` under a known force `g`.
    pub fn from_two_point(s0: f64, sg: f64, g: f64) -> Result<Self> {
        if sg == s0 {
            return Err(GripError::Rank(
                "loaded and unloaded readings coincide".into(),
            ));
        }
        let b = (sg - s0) / g;
        Self::new(1.0 / b, -s0 / b)
    }

    pub fn force(&self, voltage: f64) -> f64 {
        self.scale * voltage + self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFit {
    pub calibration: LoadCellCalibration,
    /// Root-mean-square force residual of the fit (N).
    pub residual_rms: f64,
}

/// Least-squares affine fit of known forces against raw readings.
pub fn fit_affine(samples: &[(f64, f64)]) -> Result<AffineFit> {
    if samples.len() < 2 {
        return Err(GripError::Rank(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    if samples
        .iter()
        .any(|(s, f)| !s.is_finite() || !f.is_finite())
    {
        return Err(GripError::InvalidMeasurement(
            "non-finite calibration sample".into(),
        ));
    }
    let n = samples.len() as f64;
    let mean_s = samples.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_f = samples.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (s, f) in samples {
        sxx += (s - mean_s) * (s - mean_s);
        sxy += (s - mean_s) * (f - mean_f);
    }
    if sxx <= f64::EPSILON * mean_s.abs().max(1.0) * mean_s.abs().max(1.0) {
        return Err(GripError::Rank("all readings are equal".into()));
    }
    let c = sxy / sxx;
    let d = mean_f - c * mean_s;
    let calibration = LoadCellCalibration::new(c, d)?;
    let ss: f64 = samples
        .iter()
        .map(|(s, f)| (calibration.force(*s) - f).powi(2))
        .sum();
    Ok(AffineFit {
        calibration,
        residual_rms: (ss / n).sqrt(),
    })
}

/// Coefficients of the CoP correction: row `i` is sensor `i`, column `j` the
/// coefficient of `d_i^j`. `a` drives the x correction and `b` the y correction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CopCorrectionParams {
    pub a: [[f64; 3]; 3],
    pub b: [[f64; 3]; 3],
}

impl CopCorrectionParams {
    pub const LEN: usize = 18;

    /// Largest rank the model can reach. Since `d_i v_i = s_i − p`, the linear
    /// terms of each component only span `{1, p}`, so one combination of the three
    /// sensors' linear coefficients is invisible in `x` and one in `y`.
    pub const IDENTIFIABLE: usize = 16;

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(
            Self::LEN,
            self.a
                .iter()
                .flatten()
                .chain(self.b.iter().flatten())
                .copied(),
        )
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        let mut p = Self::default();
        for i in 0..3 {
            for j in 0..3 {
                p.a[i][j] = v[3 * i + j];
                p.b[i][j] = v[9 + 3 * i + j];
            }
        }
        p
    }

    pub fn is_finite(&self) -> bool {
        self.a
            .iter()
            .chain(&self.b)
            .flatten()
            .all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct CopFit {
    pub params: CopCorrectionParams,
    /// `Σ ‖p_c − p_g‖²` at the fitted parameters (m²).
    pub cost: f64,
    /// Same cost at zero parameters.
    pub initial_cost: f64,
    pub iterations: usize,
    pub rank: usize,
    /// The data does not reach the identifiable rank; the damped minimizer is returned.
    pub underdetermined: bool,
}

/// Fits the correction polynomial by minimizing `Σ_k ‖p_c[k] − p_g[k]‖²`.
///
/// `dataset` holds `(raw CoP, ground-truth CoP)` pairs.
pub fn fit_cop_correction(
    dataset: &[(Vector2<f64>, Vector2<f64>)],
    geometry: &PadGeometry,
) -> Result<CopFit> {
    if dataset.is_empty() {
        return Err(GripError::Rank("empty CoP calibration dataset".into()));
    }
    if dataset
        .iter()
        .any(|(r, t)| !(r.x.is_finite() && r.y.is_finite() && t.x.is_finite() && t.y.is_finite()))
    {
        return Err(GripError::InvalidMeasurement(
            "non-finite CoP sample".into(),
        ));
    }
    // The correction is linear in the coefficients, so the Jacobian is fixed by the data.
    let m = dataset.len();
    let mut jac = DMatrix::zeros(2 * m, CopCorrectionParams::LEN);
    for (k, (raw, _)) in dataset.iter().enumerate() {
        for (i, (d, v)) in sensor_rays(raw, geometry).iter().enumerate() {
            let powers = [1.0, *d, d * d];
            for j in 0..3 {
                jac[(2 * k, 3 * i + j)] = powers[j] * v.x;
                jac[(2 * k + 1, 9 + 3 * i + j)] = powers[j] * v.y;
            }
        }
    }
    let residuals = |p: &DVector<f64>| {
        let params = CopCorrectionParams::from_vector(p);
        let mut r = DVector::zeros(2 * m);
        for (k, (raw, truth)) in dataset.iter().enumerate() {
            let e = correct_cop(raw, &params, geometry) - truth;
            r[2 * k] = e.x;
            r[2 * k + 1] = e.y;
        }
        r
    };
    let report = levenberg_marquardt(
        DVector::zeros(CopCorrectionParams::LEN),
        residuals,
        |_| jac.clone(),
        LmOptions::default(),
    );
    let rank = column_scaled_rank(&jac);
    let underdetermined = rank < CopCorrectionParams::IDENTIFIABLE;
    if underdetermined {
        log::warn!(
            "CoP calibration is under-determined: rank {} of {} ({} samples)",
            rank,
            CopCorrectionParams::IDENTIFIABLE,
            m
        );
    }
    Ok(CopFit {
        params: CopCorrectionParams::from_vector(&report.params),
        cost: report.cost,
        initial_cost: report.initial_cost,
        iterations: report.iterations,
        rank,
        underdetermined,
    })
}

/// Rank of the Jacobian after scaling every column to unit norm; the powers of
/// `d` span several decades, which would otherwise masquerade as rank loss.
fn column_scaled_rank(jac: &DMatrix<f64>) -> usize {
    let mut scaled = jac.clone();
    for mut col in scaled.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
    numerical_rank(&scaled, 1e-8)
}

/// Mean Euclidean error between corrected CoPs and their ground truth (m).
pub fn mean_cop_error(
    dataset: &[(Vector2<f64>, Vector2<f64>)],
    params: &CopCorrectionParams,
    geometry: &PadGeometry,
) -> f64 {
    if dataset.is_empty() {
        return 0.0;
    }
    dataset
        .iter()
        .map(|(raw, truth)| (correct_cop(raw, params, geometry) - truth).norm())
        .sum::<f64>()
        / dataset.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn affine_exact_inversion() {
        // S = 100 f + 50  =>  f = 0.01 S − 0.5
        let samples: Vec<(f64, f64)> = [0.0, 0.5, 1.0, 2.0, 5.0]
            .iter()
            .map(|&f| (100.0 * f + 50.0, f))
            .collect();
        let fit = fit_affine(&samples).unwrap();
        assert!((fit.calibration.scale - 0.01).abs() < 1e-10 * 0.01);
        assert!((fit.calibration.offset + 0.5).abs() < 1e-10 * 0.5);
        assert!(fit.residual_rms < 1e-12);
    }

    #[test]
    fn affine_two_point_form() {
        let (s0, sg, g) = (812.0, 1793.0, 4.905);
        let fit = fit_affine(&[(s0, 0.0), (sg, g)]).unwrap().calibration;
        let expected_c = g / (sg - s0);
        let expected_d = -s0 * g / (sg - s0);
        assert!((fit.scale - expected_c).abs() < 1e-12 * expected_c.abs());
        assert!((fit.offset - expected_d).abs() < 1e-12 * expected_d.abs());
        let two = LoadCellCalibration::from_two_point(s0, sg, g).unwrap();
        assert!((two.scale - expected_c).abs() < 1e-12 * expected_c.abs());
        assert!((two.offset - expected_d).abs() < 1e-12 * expected_d.abs());
    }

    #[test]
    fn affine_degenerate_is_rank_error() {
        assert!(matches!(
            fit_affine(&[(3.0, 1.0), (3.0, 2.0)]),
            Err(GripError::Rank(_))
        ));
        assert!(matches!(fit_affine(&[(3.0, 1.0)]), Err(GripError::Rank(_))));
        assert!(LoadCellCalibration::new(0.0, 1.0).is_err());
    }

    #[test]
    fn affine_noise_rms_matches_sigma() {
        let sigma = 0.02;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, sigma).unwrap();
        let samples: Vec<(f64, f64)> = (0..4000)
            .map(|i| {
                let f = (i % 100) as f64 * 0.1;
                (100.0 * f + 50.0, f + noise.sample(&mut rng))
            })
            .collect();
        let fit = fit_affine(&samples).unwrap();
        assert!(
            (fit.residual_rms - sigma).abs() < 0.05 * sigma,
            "{}",
            fit.residual_rms
        );
    }

    #[test]
    fn calibrated_input_gives_zero_params() {
        let g = PadGeometry::default();
        let data: Vec<_> = g.calibration_holes_m.iter().map(|h| (*h, *h)).collect();
        let fit = fit_cop_correction(&data, &g).unwrap();
        assert_eq!(fit.cost, 0.0);
        assert_eq!(fit.params, CopCorrectionParams::default());
        assert!(!fit.underdetermined, "rank {}", fit.rank);
    }

    #[test]
    fn center_only_dataset_is_underdetermined() {
        let g = PadGeometry::default();
        let truth = Vector2::zeros();
        let data = vec![
            (Vector2::new(0.001, 0.0), truth),
            (Vector2::new(0.0011, 0.0001), truth),
            (Vector2::new(0.0009, -0.0001), truth),
        ];
        let fit = fit_cop_correction(&data, &g).unwrap();
        assert!(fit.underdetermined);
        assert!(fit.cost <= fit.initial_cost);
        assert!(fit.params.is_finite());
    }

    #[test]
    fn params_vector_roundtrip() {
        let v = DVector::from_iterator(18, (0..18).map(f64::from));
        let p = CopCorrectionParams::from_vector(&v);
        assert_eq!(p.a[1][2], 5.0);
        assert_eq!(p.b[2][0], 15.0);
        assert_eq!(p.to_vector(), v);
    }
}
