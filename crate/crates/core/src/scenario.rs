//! Scenario files: JSON descriptions of a worker, a tool and a task.
//!
//! Angles are in degrees, times in seconds and masses in kilograms. Every
//! file carries a `"format"` version; unknown fields are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::anthropometry::{ArmSegments, BodyParams};
use crate::dynamics::{static_joint_torques, ExternalWrench, STANDARD_GRAVITY};
use crate::error::{Error, Result};
use crate::fatigue::{CapacityParams, IndexForm, DEFAULT_FATIGUE_RATE, DEFAULT_RECOVERY_FRACTION, DEFAULT_RECOVERY_RATE};
use crate::kinematics::{
    build_right_arm, default_limits, sagittal_posture_for_distance, FlexionJoint, JointLimitDeg, KinematicChain,
    PostureVector, ARM_JOINTS,
};
use crate::posture::{DiscomfortParams, ObjectiveWeights, SweepRange};
use crate::schedule::DutyCycle;
use crate::strength::{Percentile, StrengthModel};

pub const FORMAT_VERSION: u32 = 1;

/// Scenarios bundled with the library, by name.
pub const BUILTIN: [(&str, &str); 2] = [
    ("drill-2.5kg", include_str!("../scenarios/drill-2.5kg.json")),
    ("drill-3.5kg", include_str!("../scenarios/drill-3.5kg.json")),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostureSpec {
    JointAnglesDeg([f64; ARM_JOINTS]),
    /// Hand at shoulder height this far in front of the shoulder, metres.
    DistanceM(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessForce {
    pub magnitude_n: f64,
    /// Direction in which the worker pushes the tool, base frame.
    pub direction: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DutyCycleSpec {
    pub work_s: f64,
    pub rest_s: f64,
    pub cycles: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FatigueSpec {
    #[serde(default = "default_fatigue_rate")]
    pub fatigue_rate_per_min: f64,
    #[serde(default = "default_recovery_rate")]
    pub recovery_rate_per_min: f64,
    #[serde(default = "default_recovery_fraction")]
    pub recovery_fraction: f64,
    #[serde(default)]
    pub index_form: IndexForm,
}

impl Default for FatigueSpec {
    fn default() -> Self {
        Self {
            fatigue_rate_per_min: DEFAULT_FATIGUE_RATE,
            recovery_rate_per_min: DEFAULT_RECOVERY_RATE,
            recovery_fraction: DEFAULT_RECOVERY_FRACTION,
            index_form: IndexForm::default(),
        }
    }
}

fn default_fatigue_rate() -> f64 {
    DEFAULT_FATIGUE_RATE
}
fn default_recovery_rate() -> f64 {
    DEFAULT_RECOVERY_RATE
}
fn default_recovery_fraction() -> f64 {
    DEFAULT_RECOVERY_FRACTION
}
fn default_split() -> f64 {
    0.5
}
fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}
fn default_unit() -> f64 {
    30.0
}
fn default_true() -> bool {
    true
}
fn default_percentiles() -> Vec<Percentile> {
    Percentile::BANDS.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub format: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub body: BodyParams,
    pub posture: PostureSpec,
    pub tool_mass_kg: f64,
    pub process_force: ProcessForce,
    /// Share of the tool weight and push carried by the modelled arm.
    #[serde(default = "default_split")]
    pub load_split_factor: f64,
    /// Flexion loads to use instead of the computed torques, N·m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_loads_nm: Option<BTreeMap<FlexionJoint, f64>>,
    /// Whether the arm's own weight loads the joints.
    #[serde(default = "default_true")]
    pub segment_weights: bool,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    /// Length of one work unit (one hole), seconds.
    #[serde(default = "default_unit")]
    pub unit_duration_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duty_cycle: Option<DutyCycleSpec>,
    #[serde(default = "default_percentiles")]
    pub percentiles: Vec<Percentile>,
    #[serde(default)]
    pub weights: ObjectiveWeights,
    #[serde(default)]
    pub sweep: SweepRange,
    #[serde(default)]
    pub fatigue: FatigueSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<[JointLimitDeg; ARM_JOINTS]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discomfort: Option<DiscomfortParams>,
    /// Strength grid CSV, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strength_grid: Option<PathBuf>,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Scenario(format!("{field}: {msg}"))
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text)
            .map_err(|e| Error::Scenario(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut scenario = Self::from_json_str(&text).map_err(|e| match e {
            Error::Scenario(msg) => Error::Scenario(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        scenario.base_dir = path.parent().map(Path::to_path_buf);
        scenario.check_files()?;
        Ok(scenario)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_json_str(text).expect("bundled scenario is valid"))
    }

    /// A file path, or the name of a bundled scenario.
    pub fn load(spec: &str) -> Result<Self> {
        let path = Path::new(spec);
        if path.exists() {
            return Self::from_path(path);
        }
        Self::builtin(spec).ok_or_else(|| Error::Io(format!("{spec}: no such file or bundled scenario")))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != FORMAT_VERSION {
            return Err(invalid("format", format!("unsupported version {}, expected {FORMAT_VERSION}", self.format)));
        }
        self.body.validate().map_err(|e| invalid("body", e))?;
        if !(self.tool_mass_kg >= 0.0 && self.tool_mass_kg.is_finite()) {
            return Err(invalid("tool_mass_kg", "must be non-negative"));
        }
        let f = &self.process_force;
        if !(f.magnitude_n >= 0.0 && f.magnitude_n.is_finite()) {
            return Err(invalid("process_force.magnitude_n", "must be non-negative"));
        }
        let dir = Vector3::from(f.direction);
        if f.magnitude_n > 0.0 && !(dir.norm() > 0.0 && dir.norm().is_finite()) {
            return Err(invalid("process_force.direction", "must be a non-zero vector"));
        }
        if !(self.load_split_factor > 0.0 && self.load_split_factor <= 1.0) {
            return Err(invalid("load_split_factor", "must lie in (0, 1]"));
        }
        if let Some(loads) = &self.joint_loads_nm {
            if loads.len() != FlexionJoint::ALL.len() {
                return Err(invalid("joint_loads_nm", "must give both shoulder_flexion and elbow_flexion"));
            }
            if loads.values().any(|&l| !(l >= 0.0 && l.is_finite())) {
                return Err(invalid("joint_loads_nm", "loads must be non-negative"));
            }
        }
        if !(self.gravity >= 0.0 && self.gravity.is_finite()) {
            return Err(invalid("gravity", "must be non-negative"));
        }
        if !(self.unit_duration_s > 0.0 && self.unit_duration_s.is_finite()) {
            return Err(invalid("unit_duration_s", "must be positive"));
        }
        if let Some(c) = &self.duty_cycle {
            self.duty_cycle_for(c, BTreeMap::new()).validate().map_err(|e| invalid("duty_cycle", e))?;
        }
        if self.percentiles.is_empty() {
            return Err(invalid("percentiles", "at least one percentile is required"));
        }
        self.weights.validate().map_err(|e| invalid("weights", e))?;
        self.sweep.points().map_err(|e| invalid("sweep", e))?;
        let fs = &self.fatigue;
        CapacityParams::with_rates(1.0, fs.fatigue_rate_per_min, fs.recovery_rate_per_min)
            .map_err(|e| invalid("fatigue", e))?;
        if !(fs.recovery_fraction > 0.0 && fs.recovery_fraction < 1.0) {
            return Err(invalid("fatigue.recovery_fraction", "must lie in (0, 1)"));
        }
        if let Some(d) = &self.discomfort {
            d.validate().map_err(|e| invalid("discomfort", e))?;
        }
        self.chain().map_err(|e| invalid("limits", e))?;
        Ok(())
    }

    fn check_files(&self) -> Result<()> {
        if let Some(path) = self.strength_grid_path() {
            if !path.is_file() {
                return Err(invalid("strength_grid", format!("{} does not exist", path.display())));
            }
        }
        Ok(())
    }

    fn strength_grid_path(&self) -> Option<PathBuf> {
        self.strength_grid.as_ref().map(|p| match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.clone(),
        })
    }

    pub fn strength_model(&self) -> Result<StrengthModel> {
        match self.strength_grid_path() {
            Some(path) => StrengthModel::from_path(&path),
            None => Ok(StrengthModel::shipped()),
        }
    }

    pub fn chain(&self) -> Result<KinematicChain> {
        build_right_arm(&self.body, &self.limits.unwrap_or_else(default_limits))
    }

    pub fn segments(&self) -> Result<ArmSegments> {
        ArmSegments::from_body(&self.body)
    }

    pub fn discomfort_params(&self) -> DiscomfortParams {
        self.discomfort.clone().unwrap_or_default()
    }

    /// Load on the modelled hand: its share of the tool weight and of the
    /// reaction to the push.
    pub fn wrench(&self) -> ExternalWrench {
        let f = &self.process_force;
        let dir = Vector3::from(f.direction);
        let push = if f.magnitude_n > 0.0 { dir.normalize() * f.magnitude_n } else { Vector3::zeros() };
        let s = self.load_split_factor;
        ExternalWrench::tool_load(self.tool_mass_kg * s, push * s, self.gravity)
    }

    /// Gravity applied to the arm segments themselves.
    pub fn segment_gravity(&self) -> f64 {
        if self.segment_weights {
            self.gravity
        } else {
            0.0
        }
    }

    pub fn posture_vector(&self, chain: &KinematicChain) -> Result<PostureVector> {
        match self.posture {
            PostureSpec::JointAnglesDeg(deg) => {
                let q = PostureVector::from_degrees(deg);
                chain.check_limits(&q)?;
                Ok(q)
            }
            PostureSpec::DistanceM(d) => sagittal_posture_for_distance(chain, d),
        }
    }

    /// Flexion loads at the scenario posture, N·m.
    pub fn joint_loads(&self) -> Result<BTreeMap<FlexionJoint, f64>> {
        if let Some(loads) = &self.joint_loads_nm {
            return Ok(loads.clone());
        }
        let chain = self.chain()?;
        let q = self.posture_vector(&chain)?;
        let torques = static_joint_torques(&chain, &q, &self.segments()?, &self.wrench(), self.segment_gravity())?;
        Ok(FlexionJoint::ALL.iter().map(|&j| (j, torques.load(j))).collect())
    }

    pub fn capacity_params(&self, gamma_max: f64) -> Result<CapacityParams> {
        CapacityParams::with_rates(gamma_max, self.fatigue.fatigue_rate_per_min, self.fatigue.recovery_rate_per_min)
    }

    fn duty_cycle_for(&self, spec: &DutyCycleSpec, loads: BTreeMap<FlexionJoint, f64>) -> DutyCycle {
        DutyCycle {
            work_duration_s: spec.work_s,
            rest_duration_s: spec.rest_s,
            work_torque: loads,
            n_cycles: spec.cycles,
        }
    }

    pub fn duty_cycle(&self) -> Result<DutyCycle> {
        let spec = self
            .duty_cycle
            .as_ref()
            .ok_or_else(|| invalid("duty_cycle", "required for schedule simulation"))?;
        Ok(self.duty_cycle_for(spec, self.joint_loads()?))
    }
}
