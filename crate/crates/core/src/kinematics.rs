//! Five-joint right-arm chain in modified Denavit-Hartenberg form.
//!
//! The base frame sits at the shoulder centre with X pointing forward, Z up
//! and Y to the subject's left. With every joint at zero the arm hangs
//! straight down. Joint numbering (1-based, as in reports):
//!
//! | joint | motion                               | anatomical angle |
//! |-------|--------------------------------------|------------------|
//! | 1     | shoulder flexion / extension         | flexion = -q1    |
//! | 2     | shoulder adduction / abduction       |                  |
//! | 3     | upper-arm pronation / supination     |                  |
//! | 4     | elbow flexion / extension            | flexion = -q4    |
//! | 5     | forearm pronation / supination       |                  |
//!
//! The constant `theta_offset` of each row is added to the joint variable.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::anthropometry::{segment_params, BodyParams, Segment};
use crate::error::{domain, Error, Result};

pub const ARM_JOINTS: usize = 5;

/// Slack allowed when comparing angles against joint limits, rad.
const LIMIT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// One row of the modified DH table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhRow {
    pub kind: JointKind,
    pub alpha: f64,
    pub d: f64,
    pub r: f64,
    pub theta_offset: f64,
}

/// Homogeneous transform from frame `j` to frame `j-1` for joint value `q`.
///
/// Rotation about `X_{j-1}` by `alpha`, translation `d` along `X_{j-1}`,
/// rotation about `Z_j` by `theta = q + theta_offset`, translation `r` along
/// `Z_j`.
pub fn dh_transform(row: &DhRow, q: f64) -> Matrix4<f64> {
    let theta = q + row.theta_offset;
    let (st, ct) = theta.sin_cos();
    let (sa, ca) = row.alpha.sin_cos();
    #[rustfmt::skip]
    let m = Matrix4::new(
        ct,      -st,      0.0, row.d,
        ca * st, ca * ct, -sa, -row.r * sa,
        sa * st, sa * ct,  ca,  row.r * ca,
        0.0,     0.0,      0.0, 1.0,
    );
    m
}

/// Closed joint interval in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointRange {
    pub lower: f64,
    pub upper: f64,
}

impl JointRange {
    pub fn contains(&self, q: f64) -> bool {
        q >= self.lower - LIMIT_SLACK && q <= self.upper + LIMIT_SLACK
    }
}

/// Joint-limit table as it appears in scenario files: joint coordinates in
/// degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimitDeg {
    pub lower_deg: f64,
    pub upper_deg: f64,
    pub neutral_deg: f64,
}

/// Anatomical default ranges in joint coordinates: shoulder flexion
/// -45..180 deg, elbow flexion 0..145 deg, the rotational joints ±90 deg.
pub fn default_limits() -> [JointLimitDeg; ARM_JOINTS] {
    let sym = JointLimitDeg {
        lower_deg: -90.0,
        upper_deg: 90.0,
        neutral_deg: 0.0,
    };
    [
        JointLimitDeg {
            lower_deg: -180.0,
            upper_deg: 45.0,
            neutral_deg: 0.0,
        },
        sym,
        sym,
        JointLimitDeg {
            lower_deg: -145.0,
            upper_deg: 0.0,
            neutral_deg: 0.0,
        },
        sym,
    ]
}

/// The two flexion joints that carry strength and fatigue data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlexionJoint {
    #[serde(rename = "shoulder_flexion")]
    Shoulder,
    #[serde(rename = "elbow_flexion")]
    Elbow,
}

impl FlexionJoint {
    pub const ALL: [FlexionJoint; 2] = [FlexionJoint::Shoulder, FlexionJoint::Elbow];

    /// Zero-based index into the joint vector.
    pub fn index(self) -> usize {
        match self {
            FlexionJoint::Shoulder => 0,
            FlexionJoint::Elbow => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FlexionJoint::Shoulder => "shoulder_flexion",
            FlexionJoint::Elbow => "elbow_flexion",
        }
    }
}

impl std::str::FromStr for FlexionJoint {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "shoulder_flexion" | "shoulder" => Ok(FlexionJoint::Shoulder),
            "elbow_flexion" | "elbow" => Ok(FlexionJoint::Elbow),
            other => Err(domain(format!("unknown joint '{other}'"))),
        }
    }
}

/// Joint angles of the arm, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostureVector(pub [f64; ARM_JOINTS]);

impl PostureVector {
    pub fn from_degrees(deg: [f64; ARM_JOINTS]) -> Self {
        Self(deg.map(f64::to_radians))
    }

    pub fn degrees(&self) -> [f64; ARM_JOINTS] {
        self.0.map(f64::to_degrees)
    }

    pub fn shoulder_flexion_deg(&self) -> f64 {
        -self.0[0].to_degrees()
    }

    pub fn elbow_flexion_deg(&self) -> f64 {
        -self.0[3].to_degrees()
    }
}

impl std::ops::Index<usize> for PostureVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicChain {
    pub rows: Vec<DhRow>,
    pub limits: Vec<JointRange>,
    pub neutral: Vec<f64>,
    /// Shoulder-to-elbow length `RL3`, m.
    pub upper_arm_length: f64,
    /// Elbow-to-hand length `RL5`, m.
    pub forearm_length: f64,
    /// Fixed transform from the last joint frame to the hand frame.
    pub hand: Matrix4<f64>,
}

/// The right arm of a body of the given size.
pub fn build_right_arm(
    body: &BodyParams,
    limits: &[JointLimitDeg; ARM_JOINTS],
) -> Result<KinematicChain> {
    let upper = segment_params(body, Segment::UpperArm)?.length;
    let fore = segment_params(body, Segment::Forearm)?.length;
    let row = |alpha: f64, r: f64, theta_offset: f64| DhRow {
        kind: JointKind::Revolute,
        alpha,
        d: 0.0,
        r,
        theta_offset,
    };
    let rows = vec![
        row(-FRAC_PI_2, 0.0, -FRAC_PI_2),
        row(-FRAC_PI_2, 0.0, -FRAC_PI_2),
        row(-FRAC_PI_2, -upper, -FRAC_PI_2),
        row(-FRAC_PI_2, 0.0, 0.0),
        row(FRAC_PI_2, 0.0, 0.0),
    ];
    let mut ranges = Vec::with_capacity(ARM_JOINTS);
    let mut neutral = Vec::with_capacity(ARM_JOINTS);
    for (i, l) in limits.iter().enumerate() {
        if !(l.lower_deg < l.upper_deg) {
            return Err(domain(format!(
                "joint {}: lower limit {} must be below upper limit {}",
                i + 1,
                l.lower_deg,
                l.upper_deg
            )));
        }
        if l.neutral_deg < l.lower_deg || l.neutral_deg > l.upper_deg {
            return Err(domain(format!(
                "joint {}: neutral {} outside [{}, {}]",
                i + 1,
                l.neutral_deg,
                l.lower_deg,
                l.upper_deg
            )));
        }
        ranges.push(JointRange {
            lower: l.lower_deg.to_radians(),
            upper: l.upper_deg.to_radians(),
        });
        neutral.push(l.neutral_deg.to_radians());
    }
    // Same sign convention as row 3: the distal point lies at -length on Z.
    let hand = Matrix4::new_translation(&Vector3::new(0.0, 0.0, -fore));
    Ok(KinematicChain {
        rows,
        limits: ranges,
        neutral,
        upper_arm_length: upper,
        forearm_length: fore,
        hand,
    })
}

impl KinematicChain {
    pub fn check_limits(&self, q: &PostureVector) -> Result<()> {
        let joints: Vec<usize> = q
            .0
            .iter()
            .zip(&self.limits)
            .enumerate()
            .filter(|(_, (v, lim))| !lim.contains(**v))
            .map(|(i, _)| i + 1)
            .collect();
        if joints.is_empty() {
            Ok(())
        } else {
            Err(Error::LimitViolation { joints })
        }
    }

    /// Cumulative frames without the limit check: one per joint, then the hand.
    pub fn frames_unchecked(&self, q: &PostureVector) -> Vec<Matrix4<f64>> {
        let mut frames = Vec::with_capacity(self.rows.len() + 1);
        let mut acc = Matrix4::identity();
        for (row, qi) in self.rows.iter().zip(q.0.iter()) {
            acc *= dh_transform(row, *qi);
            frames.push(acc);
        }
        frames.push(acc * self.hand);
        frames
    }

    pub fn reach(&self) -> (f64, f64) {
        (
            (self.upper_arm_length - self.forearm_length).abs(),
            self.upper_arm_length + self.forearm_length,
        )
    }
}

/// Base-frame pose of every joint frame followed by the hand frame.
pub fn forward_kinematics(chain: &KinematicChain, q: &PostureVector) -> Result<Vec<Matrix4<f64>>> {
    chain.check_limits(q)?;
    Ok(chain.frames_unchecked(q))
}

pub fn translation(frame: &Matrix4<f64>) -> Vector3<f64> {
    frame.fixed_view::<3, 1>(0, 3).into_owned()
}

pub fn rotation(frame: &Matrix4<f64>) -> Matrix3<f64> {
    frame.fixed_view::<3, 3>(0, 0).into_owned()
}

/// Sagittal posture that puts the hand at shoulder height, `distance` metres
/// in front of the shoulder, elbow below the shoulder-hand line.
pub fn sagittal_posture_for_distance(chain: &KinematicChain, distance: f64) -> Result<PostureVector> {
    let (min, max) = chain.reach();
    let upper = chain.upper_arm_length;
    let fore = chain.forearm_length;
    if !(distance > min && distance <= max * (1.0 + 1e-12)) {
        return Err(Error::Unreachable { distance, min, max });
    }
    let cos_elbow =
        ((distance * distance - upper * upper - fore * fore) / (2.0 * upper * fore)).clamp(-1.0, 1.0);
    let elbow_flexion = cos_elbow.acos();
    // Angle between the upper arm and the shoulder-hand line.
    let cos_dip =
        ((upper * upper + distance * distance - fore * fore) / (2.0 * upper * distance)).clamp(-1.0, 1.0);
    let shoulder_flexion = FRAC_PI_2 - cos_dip.acos();
    let mut q = [0.0; ARM_JOINTS];
    q.copy_from_slice(&chain.neutral);
    q[0] = -shoulder_flexion;
    q[3] = -elbow_flexion;
    let posture = PostureVector(q);
    chain.check_limits(&posture)?;
    Ok(posture)
}
