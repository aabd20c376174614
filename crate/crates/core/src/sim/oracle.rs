//! Hold/slip classification of the gravity load against the pad's friction limits.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::pad::ContactResolution;
use crate::contact::{check_slip, limit_curve, ContactMode, LimitCurve, PressureField, SlipClass};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlipStatus {
    Hold,
    SlipTranslate,
    SlipRotate,
}

impl SlipStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SlipStatus::Hold => "hold",
            SlipStatus::SlipTranslate => "slip-translate",
            SlipStatus::SlipRotate => "slip-rotate",
        }
    }

    pub fn is_slip(&self) -> bool {
        *self != SlipStatus::Hold
    }
}

/// Steps per pad radius used to quantize the CoP offset when caching curves.
const OFFSET_STEPS: f64 = 4096.0;
const ORACLE_CORS: usize = 64;

/// Slip oracle with a cache of unit limit curves (`μ = f_n = R = 1`) keyed by the
/// quantized CoP offset. The curve scales linearly in `μ f_n` and in `R` along
/// the torque axis, so one unit curve serves every contact with that `|P|/R`.
#[derive(Debug, Default)]
pub struct SlipOracle {
    cache: BTreeMap<u32, LimitCurve>,
}

impl SlipOracle {
    pub fn new() -> Self {
        Self::default()
    }

    fn unit_curve(&mut self, offset_fraction: f64) -> Result<&LimitCurve> {
        let key = (offset_fraction * OFFSET_STEPS).round().max(0.0) as u32;
        if let Entry::Vacant(slot) = self.cache.entry(key) {
            let p = key as f64 / OFFSET_STEPS;
            let gradient = 4.0 * p / std::f64::consts::PI;
            let field = PressureField::linear(1.0, gradient, Vector2::x(), 1.0)?;
            slot.insert(limit_curve(&field, 1.0, ORACLE_CORS)?);
        }
        Ok(&self.cache[&key])
    }

    /// Classifies the per-pad load `(f_g, τ_g)`.
    ///
    /// In full contact the torque is taken with the sense of the curve's upper arc,
    /// the same orientation the control line and the offset grip law assume.
    pub fn classify(
        &mut self,
        f_g: f64,
        tau_g: f64,
        contact: &ContactResolution,
        mu: f64,
    ) -> Result<SlipStatus> {
        let f_g = f_g.abs();
        let tau_g = tau_g.abs();
        if f_g == 0.0 && tau_g == 0.0 {
            return Ok(SlipStatus::Hold);
        }
        let f_n = contact.reaction_n;
        let dominant = |fx: f64, ty: f64| {
            if fx >= ty {
                SlipStatus::SlipTranslate
            } else {
                SlipStatus::SlipRotate
            }
        };
        match contact.state.mode {
            ContactMode::Separated => Ok(dominant(f_g, tau_g)),
            ContactMode::EdgeContact => {
                let r = contact.state.cop_offset_m.norm();
                if tau_g > 1e-9 * mu * f_n * r {
                    Ok(SlipStatus::SlipRotate)
                } else if f_g > mu * f_n * contact.state.tilt_rad.cos() {
                    Ok(SlipStatus::SlipTranslate)
                } else {
                    Ok(SlipStatus::Hold)
                }
            }
            ContactMode::FullContact => {
                let field = contact
                    .field
                    .expect("full contact carries a pressure field");
                let r = field.radius_m;
                let fs = mu * f_n;
                let w = Vector2::new(f_g / fs, tau_g / (fs * r));
                let curve = self.unit_curve(field.cop().norm() / r)?;
                if check_slip(w, curve) != SlipClass::Outside {
                    return Ok(SlipStatus::Hold);
                }
                Ok(dominant(w.x / curve.f_max, w.y / curve.tau_max()))
            }
        }
    }
}

/// One-shot classification without a shared cache.
pub fn slip_oracle(
    f_g: f64,
    tau_g: f64,
    contact: &ContactResolution,
    mu: f64,
) -> Result<SlipStatus> {
    SlipOracle::new().classify(f_g, tau_g, contact, mu)
}
