//! Posture-dependent joint strength with population spread.
//!
//! Strength surfaces are data: a rectilinear grid over (shoulder flexion,
//! elbow flexion) per joint, read from a CSV file with the header
//! `joint,shoulder_deg,elbow_deg,mean_Nm,sd_Nm`. Lines starting with `#` are
//! comments. Queries interpolate bilinearly and refuse to extrapolate.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{FlexionJoint, PostureVector};

/// The shipped grid: one measured anchor plus a synthetic surface.
pub const DEFAULT_GRID_CSV: &str = include_str!("../data/strength_grid.csv");

const HEADER: [&str; 5] = ["joint", "shoulder_deg", "elbow_deg", "mean_Nm", "sd_Nm"];

/// Mean strength and standard deviation across the population, N·m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrengthEntry {
    pub mean: f64,
    pub sd: f64,
}

/// Population percentile expressed as a multiple of the standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub struct Percentile(i32);

impl Percentile {
    pub const MEAN: Percentile = Percentile(0);
    /// The five bands reported for a 95% population.
    pub const BANDS: [Percentile; 5] = [
        Percentile(-2),
        Percentile(-1),
        Percentile(0),
        Percentile(1),
        Percentile(2),
    ];

    pub fn new(z: i32) -> Result<Self> {
        if (-2..=2).contains(&z) {
            Ok(Self(z))
        } else {
            Err(Error::Domain(format!("percentile multiplier must be in -2..=2, got {z}")))
        }
    }

    pub fn z(self) -> i32 {
        self.0
    }

    pub fn label(self) -> String {
        match self.0 {
            0 => "mean".to_string(),
            1 => "+1sd".to_string(),
            -1 => "-1sd".to_string(),
            z if z > 0 => format!("+{z}sd"),
            z => format!("{z}sd"),
        }
    }
}

impl TryFrom<i32> for Percentile {
    type Error = Error;
    fn try_from(z: i32) -> Result<Self> {
        Percentile::new(z)
    }
}

impl From<Percentile> for i32 {
    fn from(p: Percentile) -> i32 {
        p.0
    }
}

/// `mean + z·sd`; non-positive strengths are rejected.
pub fn percentile_strength(mean: f64, sd: f64, z: Percentile) -> Result<f64> {
    let value = mean + z.0 as f64 * sd;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::DegeneratePopulation(value))
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Grid {
    shoulder: Vec<f64>,
    elbow: Vec<f64>,
    /// Row-major over (shoulder, elbow).
    values: Vec<StrengthEntry>,
}

impl Grid {
    fn at(&self, i: usize, j: usize) -> StrengthEntry {
        self.values[i * self.elbow.len() + j]
    }

    fn interpolate(&self, shoulder_deg: f64, elbow_deg: f64) -> Result<StrengthEntry> {
        let outside = || Error::Extrapolation {
            shoulder_deg,
            elbow_deg,
        };
        let (i, ts) = locate(&self.shoulder, shoulder_deg).ok_or_else(outside)?;
        let (j, te) = locate(&self.elbow, elbow_deg).ok_or_else(outside)?;
        let (i1, j1) = ((i + 1).min(self.shoulder.len() - 1), (j + 1).min(self.elbow.len() - 1));
        let blend = |f: fn(&StrengthEntry) -> f64| {
            f(&self.at(i, j)) * (1.0 - ts) * (1.0 - te)
                + f(&self.at(i1, j)) * ts * (1.0 - te)
                + f(&self.at(i, j1)) * (1.0 - ts) * te
                + f(&self.at(i1, j1)) * ts * te
        };
        Ok(StrengthEntry {
            mean: blend(|e| e.mean),
            sd: blend(|e| e.sd),
        })
    }
}

/// Cell index and fractional position of `x` along a sorted axis.
fn locate(axis: &[f64], x: f64) -> Option<(usize, f64)> {
    let (first, last) = (*axis.first()?, *axis.last()?);
    if !(x >= first && x <= last) {
        return None;
    }
    if axis.len() == 1 {
        return Some((0, 0.0));
    }
    let upper = axis.partition_point(|&a| a <= x).clamp(1, axis.len() - 1);
    let lo = upper - 1;
    let t = (x - axis[lo]) / (axis[upper] - axis[lo]);
    Some((lo, t))
}

#[derive(Debug, Deserialize)]
struct Record {
    joint: String,
    shoulder_deg: f64,
    elbow_deg: f64,
    #[serde(rename = "mean_Nm")]
    mean: f64,
    #[serde(rename = "sd_Nm")]
    sd: f64,
}

/// Strength surfaces for the shoulder and elbow flexion joints.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthModel {
    grids: BTreeMap<FlexionJoint, Grid>,
}

impl StrengthModel {
    pub fn shipped() -> Self {
        Self::from_csv_str(DEFAULT_GRID_CSV).expect("shipped strength grid is valid")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv_str(&text).map_err(|e| match e {
            Error::Grid(msg) => Error::Grid(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::Grid(e.to_string()))?
            .clone();
        if header.iter().collect::<Vec<_>>() != HEADER {
            return Err(Error::Grid(format!(
                "expected header {}, found {}",
                HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut raw: BTreeMap<FlexionJoint, Vec<Record>> = BTreeMap::new();
        for (n, rec) in reader.deserialize::<Record>().enumerate() {
            let rec = rec.map_err(|e| Error::Grid(format!("record {}: {e}", n + 1)))?;
            let joint: FlexionJoint = rec
                .joint
                .parse()
                .map_err(|_| Error::Grid(format!("record {}: unknown joint '{}'", n + 1, rec.joint)))?;
            if !(rec.mean > 0.0) || !(rec.sd >= 0.0) {
                return Err(Error::Grid(format!(
                    "record {}: mean must be positive and sd non-negative",
                    n + 1
                )));
            }
            raw.entry(joint).or_default().push(rec);
        }
        let mut grids = BTreeMap::new();
        for joint in FlexionJoint::ALL {
            let records = raw
                .remove(&joint)
                .ok_or_else(|| Error::Grid(format!("no rows for {}", joint.name())))?;
            grids.insert(joint, build_grid(joint, records)?);
        }
        Ok(Self { grids })
    }

    /// Strength at explicit flexion angles (degrees).
    pub fn strength_at(&self, joint: FlexionJoint, shoulder_deg: f64, elbow_deg: f64) -> Result<StrengthEntry> {
        self.grids[&joint].interpolate(shoulder_deg, elbow_deg)
    }
}

fn build_grid(joint: FlexionJoint, records: Vec<Record>) -> Result<Grid> {
    let axis = |get: fn(&Record) -> f64| {
        let mut v: Vec<f64> = records.iter().map(get).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let shoulder = axis(|r| r.shoulder_deg);
    let elbow = axis(|r| r.elbow_deg);
    let mut slots: Vec<Option<StrengthEntry>> = vec![None; shoulder.len() * elbow.len()];
    for r in &records {
        let i = shoulder.partition_point(|&s| s < r.shoulder_deg);
        let j = elbow.partition_point(|&e| e < r.elbow_deg);
        let slot = &mut slots[i * elbow.len() + j];
        if slot.is_some() {
            return Err(Error::Grid(format!(
                "{}: duplicate point ({}, {})",
                joint.name(),
                r.shoulder_deg,
                r.elbow_deg
            )));
        }
        *slot = Some(StrengthEntry {
            mean: r.mean,
            sd: r.sd,
        });
    }
    let values = slots
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Grid(format!("{}: grid is not rectilinear", joint.name())))?;
    Ok(Grid {
        shoulder,
        elbow,
        values,
    })
}

/// Mean and spread of a joint's flexion strength in posture `q`.
pub fn joint_strength(model: &StrengthModel, joint: FlexionJoint, q: &PostureVector) -> Result<StrengthEntry> {
    model.strength_at(joint, q.shoulder_flexion_deg(), q.elbow_flexion_deg())
}
