//! Segment masses, dimensions and inertias of the arm from body mass and
//! stature. Each segment is a uniform solid cylinder; the hand is lumped into
//! the forearm.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Share of body mass carried by one whole arm.
const ARM_MASS_FRACTION: f64 = 0.051;
const FOREARM_SHARE: f64 = 0.451;
const UPPER_ARM_SHARE: f64 = 0.549;
const FOREARM_LENGTH_FRACTION: f64 = 0.146;
const UPPER_ARM_LENGTH_FRACTION: f64 = 0.186;
const RADIUS_TO_LENGTH: f64 = 0.125;

/// Whole-body mass (kg) and stature (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyParams {
    pub mass_kg: f64,
    pub height_m: f64,
}

impl BodyParams {
    pub fn new(mass_kg: f64, height_m: f64) -> Result<Self> {
        let body = Self { mass_kg, height_m };
        body.validate()?;
        Ok(body)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass_kg > 0.0 && self.mass_kg.is_finite()) {
            return Err(domain(format!("body mass must be positive, got {}", self.mass_kg)));
        }
        if !(self.height_m > 0.0 && self.height_m.is_finite()) {
            return Err(domain(format!("body height must be positive, got {}", self.height_m)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    UpperArm,
    /// Forearm with the hand included.
    Forearm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentParams {
    pub mass: f64,
    pub length: f64,
    pub radius: f64,
    /// Central inertia about the segment frame, long axis on Z.
    pub inertia: Matrix3<f64>,
    /// Centre of mass as a fraction of length from the proximal joint.
    pub com_offset: f64,
}

pub fn segment_params(body: &BodyParams, segment: Segment) -> Result<SegmentParams> {
    body.validate()?;
    let (share, length_fraction) = match segment {
        Segment::Forearm => (FOREARM_SHARE, FOREARM_LENGTH_FRACTION),
        Segment::UpperArm => (UPPER_ARM_SHARE, UPPER_ARM_LENGTH_FRACTION),
    };
    let mass = share * ARM_MASS_FRACTION * body.mass_kg;
    let length = length_fraction * body.height_m;
    let radius = RADIUS_TO_LENGTH * length;
    Ok(SegmentParams {
        mass,
        length,
        radius,
        inertia: inertia_tensor(mass, radius, length),
        com_offset: 0.5,
    })
}

/// Diagonal inertia of a solid cylinder about its centre, long axis on Z.
pub fn inertia_tensor(mass: f64, radius: f64, length: f64) -> Matrix3<f64> {
    let transverse = mass * radius * radius / 4.0 + mass * length * length / 12.0;
    let axial = mass * radius * radius / 2.0;
    Matrix3::from_diagonal(&nalgebra::Vector3::new(transverse, transverse, axial))
}

/// Upper arm and forearm of one arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmSegments {
    pub upper_arm: SegmentParams,
    pub forearm: SegmentParams,
}

impl ArmSegments {
    pub fn from_body(body: &BodyParams) -> Result<Self> {
        Ok(Self {
            upper_arm: segment_params(body, Segment::UpperArm)?,
            forearm: segment_params(body, Segment::Forearm)?,
        })
    }
}
