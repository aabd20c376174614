//! Scenario description and the four built-in experiment presets.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::body::BoxObject;
use super::pad::CompliantPad;
use crate::control::ControllerGains;
use crate::error::{GripError, Result};
use crate::planner::{ArmModel, ObstacleBox, PlannerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerMode {
    /// Grip-force regulation only; pads keep their commanded orientation.
    ForceOnly,
    /// Grip-force regulation plus CoP alignment.
    Hybrid,
}

impl ControllerMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerMode::ForceOnly => "force-only",
            ControllerMode::Hybrid => "hybrid",
        }
    }
}

impl std::str::FromStr for ControllerMode {
    type Err = GripError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "force-only" => Ok(ControllerMode::ForceOnly),
            "hybrid" => Ok(ControllerMode::Hybrid),
            other => Err(GripError::InvalidParameter(format!(
                "unknown controller `{other}` (expected force-only or hybrid)"
            ))),
        }
    }
}

/// Grip-force reference used while the box is carried.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReferenceMode {
    Fixed {
        force_n: f64,
    },
    /// Per-segment upper bound from the limit curve, never below `floor_n`.
    Regulated {
        floor_n: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraspSetup {
    /// Box centre in the world y–z plane when the pads close on it.
    pub box_center_m: Vector2<f64>,
    /// Free gap between each pad and its face before closing (m).
    pub approach_gap_m: f64,
    /// Extra pad pitch away from flush, mirrored between the pads (rad).
    pub misalignment_rad: f64,
    pub max_ticks: usize,
    /// Consecutive quiet ticks that end the grip phase.
    pub settle_ticks: usize,
}

impl Default for GraspSetup {
    fn default() -> Self {
        Self {
            box_center_m: Vector2::new(0.0, -0.10),
            approach_gap_m: 0.002,
            misalignment_rad: 0.0,
            max_ticks: 600,
            settle_ticks: 20,
        }
    }
}

/// Carry motion after the grip: pad-midpoint displacements relative to the grip
/// position, visited in order, and a roll about the grip axis that rises as
/// `roll_peak · sin(π t)` over the whole carry and returns to zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Motion {
    pub waypoints_m: Vec<Vector2<f64>>,
    pub roll_peak_rad: f64,
}

/// Box displacement applied on each tick the oracle reports slip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlipIncrements {
    pub translate_m: f64,
    pub rotate_rad: f64,
}

impl Default for SlipIncrements {
    fn default() -> Self {
        Self {
            translate_m: 0.001,
            rotate_rad: 1f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "box")]
    pub body: BoxObject,
    #[serde(default)]
    pub pad: CompliantPad,
    #[serde(default)]
    pub gains: ControllerGains,
    pub controller: ControllerMode,
    pub reference: ReferenceMode,
    #[serde(default)]
    pub arm: ArmModel,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub grasp: GraspSetup,
    #[serde(default)]
    pub motion: Motion,
    #[serde(default = "default_noise")]
    pub noise_sigma_n: f64,
    #[serde(default)]
    pub slip: SlipIncrements,
}

fn default_noise() -> f64 {
    0.01
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.body.validate()?;
        self.pad.validate()?;
        self.gains.validate()?;
        self.arm.validate()?;
        self.planner.validate()?;
        match self.reference {
            ReferenceMode::Fixed { force_n: f } | ReferenceMode::Regulated { floor_n: f } => {
                if !(f.is_finite() && f > 0.0) {
                    return Err(GripError::InvalidParameter(format!("force reference {f}")));
                }
            }
        }
        if !(self.noise_sigma_n.is_finite() && self.noise_sigma_n >= 0.0) {
            return Err(GripError::InvalidParameter(
                "noise sigma must be nonnegative".into(),
            ));
        }
        let g = &self.grasp;
        if !(g.approach_gap_m.is_finite() && g.approach_gap_m >= 0.0)
            || g.max_ticks == 0
            || g.settle_ticks == 0
        {
            return Err(GripError::InvalidParameter("grasp setup".into()));
        }
        if !(g.misalignment_rad.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(GripError::InvalidParameter(
                "misalignment must be below 90°".into(),
            ));
        }
        Ok(())
    }

    /// Built-in experiment `1..=4` with the given controller.
    pub fn preset(experiment: u8, controller: ControllerMode) -> Result<Self> {
        let planner = |body: &BoxObject| PlannerConfig {
            obstacle: Some(ObstacleBox {
                offset_from_pads_m: Vector2::zeros(),
                half_extents_m: Vector2::new(0.5 * body.size_m.y, 0.5 * body.size_m.z),
            }),
            ..PlannerConfig::default()
        };
        let base = |name: &str,
                    body: BoxObject,
                    reference: ReferenceMode,
                    misalignment_deg: f64,
                    motion: Motion| {
            let p = planner(&body);
            Scenario {
                name: name.to_string(),
                seed: 0,
                body,
                pad: CompliantPad::default(),
                gains: ControllerGains::default(),
                controller,
                reference,
                arm: ArmModel::default(),
                planner: p,
                grasp: GraspSetup {
                    misalignment_rad: misalignment_deg.to_radians(),
                    ..GraspSetup::default()
                },
                motion,
                noise_sigma_n: default_noise(),
                slip: SlipIncrements::default(),
            }
        };
        let lift = Motion {
            waypoints_m: vec![Vector2::new(0.0, 0.05)],
            roll_peak_rad: 0.0,
        };
        let offset_box = |tilt_deg: f64| BoxObject {
            mass_kg: 0.2,
            com_offset_m: Vector3::new(0.01, 0.0, 0.0),
            face_tilt_rad: tilt_deg.to_radians(),
            ..BoxObject::default()
        };
        Ok(match experiment {
            1 => base(
                "exp1-horizontal-move",
                BoxObject::default(),
                ReferenceMode::Fixed { force_n: 2.0 },
                0.5,
                Motion {
                    waypoints_m: vec![Vector2::new(0.04, 0.0), Vector2::new(-0.04, 0.0)],
                    roll_peak_rad: 0.0,
                },
            ),
            2 => base(
                "exp2-lift-and-roll",
                BoxObject {
                    size_m: Vector3::new(0.06, 0.08, 0.14),
                    com_offset_m: Vector3::new(0.0, 0.0, 0.06),
                    ..BoxObject::default()
                },
                ReferenceMode::Regulated { floor_n: 2.0 },
                0.0,
                Motion {
                    waypoints_m: vec![Vector2::new(0.0, 0.05)],
                    roll_peak_rad: 30f64.to_radians(),
                },
            ),
            3 => base(
                "exp3-lift-flat-faces",
                offset_box(0.0),
                ReferenceMode::Fixed { force_n: 3.5 },
                10.0,
                lift,
            ),
            4 => base(
                "exp4-lift-tilted-faces",
                offset_box(15.0),
                ReferenceMode::Fixed { force_n: 3.5 },
                10.0,
                lift,
            ),
            other => {
                return Err(GripError::InvalidParameter(format!(
                    "unknown experiment {other} (expected 1 to 4)"
                )))
            }
        })
    }
}
