//! Stress and discomfort of sagittal drilling postures, and the working
//! distance that balances them.
//!
//! The discomfort index compares each joint angle with its limits and its
//! neutral position:
//!
//! ```text
//! f = (1/G) Σ [ γ (Δq_norm)² + G·QU + G·QL ]
//! Δq_norm = (q - q_N) / (q_U - q_L)
//! QU = (½ sin(5 (q_U - q) / (q_U - q_L) + π/2) + 1)^100
//! QL = (½ sin(5 (q - q_L) / (q_U - q_L) + π/2) + 1)^100
//! ```
//!
//! The sine arguments are pure ratios. The penalties are negligible only in
//! the middle of a joint's range and grow to `1.5^100` at the limits.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anthropometry::ArmSegments;
use crate::dynamics::{static_joint_torques, ExternalWrench, JointTorques};
use crate::error::{domain, Error, Result};
use crate::kinematics::{sagittal_posture_for_distance, FlexionJoint, KinematicChain, PostureVector, ARM_JOINTS};
use crate::strength::{joint_strength, percentile_strength, Percentile, StrengthModel};

pub const DEFAULT_G: f64 = 1e6;
const PENALTY_POWER: i32 = 100;

/// Discomfort parameters of one joint, in joint coordinates (degrees).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointDiscomfort {
    /// Zero-based joint index.
    pub joint: usize,
    pub lower_deg: f64,
    pub upper_deg: f64,
    pub neutral_deg: f64,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

fn default_g() -> f64 {
    DEFAULT_G
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscomfortParams {
    pub joints: Vec<JointDiscomfort>,
    #[serde(default = "default_g")]
    pub g: f64,
}

impl Default for DiscomfortParams {
    /// Shoulder and elbow flexion over the arm's joint limits. The elbow is
    /// most comfortable slightly bent.
    fn default() -> Self {
        Self {
            joints: vec![
                JointDiscomfort {
                    joint: FlexionJoint::Shoulder.index(),
                    lower_deg: -180.0,
                    upper_deg: 45.0,
                    neutral_deg: 0.0,
                    weight: 1.0,
                },
                JointDiscomfort {
                    joint: FlexionJoint::Elbow.index(),
                    lower_deg: -145.0,
                    upper_deg: 0.0,
                    neutral_deg: -15.0,
                    weight: 1.0,
                },
            ],
            g: DEFAULT_G,
        }
    }
}

impl DiscomfortParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(domain(format!("G must be positive, got {}", self.g)));
        }
        for j in &self.joints {
            if j.joint >= ARM_JOINTS {
                return Err(domain(format!("joint index {} out of range", j.joint)));
            }
            if !(j.lower_deg < j.neutral_deg && j.neutral_deg < j.upper_deg) {
                return Err(domain(format!(
                    "joint {}: need lower < neutral < upper, got {} / {} / {}",
                    j.joint + 1,
                    j.lower_deg,
                    j.neutral_deg,
                    j.upper_deg
                )));
            }
            if !(j.weight >= 0.0 && j.weight.is_finite()) {
                return Err(domain(format!("joint {}: weight must be non-negative", j.joint + 1)));
            }
        }
        Ok(())
    }
}

fn sine_power(ratio: f64) -> f64 {
    (0.5 * (5.0 * ratio + FRAC_PI_2).sin() + 1.0).powi(PENALTY_POWER)
}

/// Upper-limit penalty at `q_deg`.
pub fn upper_penalty(j: &JointDiscomfort, q_deg: f64) -> f64 {
    sine_power((j.upper_deg - q_deg) / (j.upper_deg - j.lower_deg))
}

/// Lower-limit penalty at `q_deg`.
pub fn lower_penalty(j: &JointDiscomfort, q_deg: f64) -> f64 {
    sine_power((q_deg - j.lower_deg) / (j.upper_deg - j.lower_deg))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscomfortTerm {
    pub joint: usize,
    pub deviation: f64,
    pub upper_penalty: f64,
    pub lower_penalty: f64,
    /// Contribution of this joint to the index.
    pub value: f64,
}

pub fn discomfort_terms(q: &PostureVector, params: &DiscomfortParams) -> Vec<DiscomfortTerm> {
    let deg = q.degrees();
    params
        .joints
        .iter()
        .map(|j| {
            let qi = deg[j.joint];
            let deviation = (qi - j.neutral_deg) / (j.upper_deg - j.lower_deg);
            let upper = upper_penalty(j, qi);
            let lower = lower_penalty(j, qi);
            DiscomfortTerm {
                joint: j.joint,
                deviation,
                upper_penalty: upper,
                lower_penalty: lower,
                value: j.weight * deviation * deviation / params.g + upper + lower,
            }
        })
        .collect()
}

pub fn discomfort_index(q: &PostureVector, params: &DiscomfortParams) -> f64 {
    discomfort_terms(q, params).iter().map(|t| t.value).sum()
}

/// Sum of squared relative loads of the flexion joints.
pub fn stress_index(torques: &JointTorques, strengths: &BTreeMap<FlexionJoint, f64>) -> Result<f64> {
    strengths.iter().try_fold(0.0, |acc, (&joint, &strength)| {
        if !(strength > 0.0) {
            return Err(domain(format!("{} strength must be positive, got {strength}", joint.name())));
        }
        let r = torques.load(joint) / strength;
        Ok(acc + r * r)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub w1: f64,
    pub w2: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self { w1: 1.0, w2: 1.0 }
    }
}

impl ObjectiveWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.w1 >= 0.0 && self.w2 >= 0.0 && self.w1.is_finite() && self.w2.is_finite()) {
            return Err(domain(format!("weights must be non-negative, got ({}, {})", self.w1, self.w2)));
        }
        if self.w1 == 0.0 && self.w2 == 0.0 {
            return Err(domain("at least one weight must be positive"));
        }
        Ok(())
    }
}

/// Largest stress and discomfort over the evaluated domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizers {
    pub stress: f64,
    pub discomfort: f64,
}

pub fn overall_objective(
    stress: f64,
    discomfort: f64,
    weights: &ObjectiveWeights,
    norms: &Normalizers,
) -> Result<f64> {
    if !(norms.stress > 0.0) || !(norms.discomfort > 0.0) {
        return Err(domain(format!(
            "normalizers must be positive, got stress {} and discomfort {}",
            norms.stress, norms.discomfort
        )));
    }
    Ok(weights.w1 * stress / norms.stress + weights.w2 * discomfort / norms.discomfort)
}

/// Inclusive distance grid, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for SweepRange {
    fn default() -> Self {
        Self {
            start: 0.40,
            stop: 0.50,
            step: 0.005,
        }
    }
}

impl SweepRange {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(domain(format!("sweep step must be positive, got {}", self.step)));
        }
        if !(self.start.is_finite() && self.stop >= self.start) {
            return Err(domain(format!("sweep range [{}, {}] is empty", self.start, self.stop)));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

/// Everything needed to evaluate a sagittal posture at a given distance.
#[derive(Debug, Clone, Copy)]
pub struct SweepSetup<'a> {
    pub chain: &'a KinematicChain,
    pub segments: &'a ArmSegments,
    pub wrench: ExternalWrench,
    pub gravity: f64,
    pub strength: &'a StrengthModel,
    pub discomfort: &'a DiscomfortParams,
}

/// One evaluated distance, before normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostureEval {
    pub distance: f64,
    pub posture: PostureVector,
    pub torques: JointTorques,
    pub stress_mean: f64,
    /// Stress for the strong end of the population (+2σ strength).
    pub stress_lo: f64,
    /// Stress for the weak end of the population (−2σ strength).
    pub stress_hi: f64,
    pub discomfort_shoulder: f64,
    pub discomfort_elbow: f64,
    pub discomfort_total: f64,
}

pub fn evaluate_distance(setup: &SweepSetup, distance: f64) -> Result<PostureEval> {
    let posture = sagittal_posture_for_distance(setup.chain, distance)?;
    let torques = static_joint_torques(setup.chain, &posture, setup.segments, &setup.wrench, setup.gravity)?;
    let mut bands = [BTreeMap::new(), BTreeMap::new(), BTreeMap::new()];
    for joint in FlexionJoint::ALL {
        let s = joint_strength(setup.strength, joint, &posture)?;
        for (band, z) in bands.iter_mut().zip([0, 2, -2]) {
            band.insert(joint, percentile_strength(s.mean, s.sd, Percentile::new(z)?)?);
        }
    }
    let terms = discomfort_terms(&posture, setup.discomfort);
    let for_joint = |j: FlexionJoint| terms.iter().filter(|t| t.joint == j.index()).map(|t| t.value).sum();
    Ok(PostureEval {
        distance,
        posture,
        torques,
        stress_mean: stress_index(&torques, &bands[0])?,
        stress_lo: stress_index(&torques, &bands[1])?,
        stress_hi: stress_index(&torques, &bands[2])?,
        discomfort_shoulder: for_joint(FlexionJoint::Shoulder),
        discomfort_elbow: for_joint(FlexionJoint::Elbow),
        discomfort_total: terms.iter().map(|t| t.value).sum(),
    })
}

/// Evaluates every grid distance in parallel, returned in grid order.
pub fn evaluate_grid(setup: &SweepSetup, range: &SweepRange) -> Result<Vec<PostureEval>> {
    setup.discomfort.validate()?;
    range
        .points()?
        .into_par_iter()
        .map(|d| evaluate_distance(setup, d))
        .collect()
}

pub fn normalizers(grid: &[PostureEval]) -> Normalizers {
    Normalizers {
        stress: grid.iter().map(|p| p.stress_mean).fold(0.0, f64::max),
        discomfort: grid.iter().map(|p| p.discomfort_total).fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub distance: f64,
    pub posture: PostureVector,
    pub stress_mean: f64,
    pub discomfort_total: f64,
    pub objective: f64,
    /// Whether the golden-section step improved on the best grid point.
    pub refined: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<PostureEval>,
    pub objective: Vec<f64>,
    pub normalizers: Normalizers,
    pub weights: ObjectiveWeights,
    pub optimum: Optimum,
}

const GOLDEN_TOLERANCE: f64 = 1e-7;

/// Minimizes the objective over an evaluated grid, then refines between the
/// neighbours of the best grid cell.
pub fn select_optimum(
    setup: &SweepSetup,
    grid: &[PostureEval],
    weights: &ObjectiveWeights,
    norms: &Normalizers,
) -> Result<(Vec<f64>, Optimum)> {
    weights.validate()?;
    let objective: Vec<f64> = grid
        .iter()
        .map(|p| overall_objective(p.stress_mean, p.discomfort_total, weights, norms))
        .collect::<Result<_>>()?;
    let best = (0..grid.len())
        .reduce(|a, b| if objective[b] < objective[a] { b } else { a })
        .ok_or_else(|| domain("empty sweep"))?;
    let mut optimum = Optimum {
        distance: grid[best].distance,
        posture: grid[best].posture,
        stress_mean: grid[best].stress_mean,
        discomfort_total: grid[best].discomfort_total,
        objective: objective[best],
        refined: false,
    };
    if grid.len() >= 2 {
        let lo = grid[best.saturating_sub(1)].distance;
        let hi = grid[(best + 1).min(grid.len() - 1)].distance;
        let f = |d: f64| -> Result<(f64, PostureEval)> {
            let e = evaluate_distance(setup, d)?;
            Ok((overall_objective(e.stress_mean, e.discomfort_total, weights, norms)?, e))
        };
        let (value, eval) = golden_section(lo, hi, f)?;
        if value < optimum.objective {
            optimum = Optimum {
                distance: eval.distance,
                posture: eval.posture,
                stress_mean: eval.stress_mean,
                discomfort_total: eval.discomfort_total,
                objective: value,
                refined: true,
            };
        }
    }
    Ok((objective, optimum))
}

fn golden_section<F>(mut a: f64, mut b: f64, f: F) -> Result<(f64, PostureEval)>
where
    F: Fn(f64) -> Result<(f64, PostureEval)>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > GOLDEN_TOLERANCE {
        if fc.0 <= fd.0 {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc.0 <= fd.0 { fc } else { fd })
}

/// Full sweep: grid evaluation, normalization over the grid, optimum.
pub fn sweep_distance(setup: &SweepSetup, range: &SweepRange, weights: &ObjectiveWeights) -> Result<SweepResult> {
    let points = evaluate_grid(setup, range)?;
    let norms = normalizers(&points);
    let (objective, optimum) = select_optimum(setup, &points, weights, &norms)?;
    Ok(SweepResult {
        points,
        objective,
        normalizers: norms,
        weights: *weights,
        optimum,
    })
}

/// Optimum for each weight pair, sharing one grid evaluation.
pub fn tradeoff_front(
    setup: &SweepSetup,
    range: &SweepRange,
    weights: &[ObjectiveWeights],
) -> Result<Vec<(ObjectiveWeights, Optimum)>> {
    let points = evaluate_grid(setup, range)?;
    let norms = normalizers(&points);
    weights
        .iter()
        .map(|w| Ok((*w, select_optimum(setup, &points, w, &norms)?.1)))
        .collect()
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Io(e.to_string());
        w.write_record([
            "distance_m",
            "q1_deg",
            "q4_deg",
            "stress_mean",
            "stress_lo",
            "stress_hi",
            "discomfort_shoulder",
            "discomfort_elbow",
            "discomfort_total",
            "objective",
        ])
        .map_err(err)?;
        for (p, obj) in self.points.iter().zip(&self.objective) {
            let deg = p.posture.degrees();
            w.write_record([
                format!("{:.4}", p.distance),
                format!("{:.4}", deg[0]),
                format!("{:.4}", deg[3]),
                format!("{:.6e}", p.stress_mean),
                format!("{:.6e}", p.stress_lo),
                format!("{:.6e}", p.stress_hi),
                format!("{:.6e}", p.discomfort_shoulder),
                format!("{:.6e}", p.discomfort_elbow),
                format!("{:.6e}", p.discomfort_total),
                format!("{:.6e}", obj),
            ])
            .map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }
}
