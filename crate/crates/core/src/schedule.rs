//! Repeated work/rest cycles, completable work units and rest
//! recommendations. Durations are in seconds here and converted to the
//! fatigue model's minutes internally.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fatigue::{
    decay_capacity, endurance_time, recover_capacity, recovery_time_to_fraction, CapacityParams,
};
use crate::kinematics::FlexionJoint;

/// Relative drop in end-of-rest capacity, as a fraction of `Γ_max`, that
/// counts as cumulative fatigue.
pub const CUMULATIVE_TOLERANCE: f64 = 1e-3;

pub type JointParams = BTreeMap<FlexionJoint, CapacityParams>;

fn minutes(seconds: f64) -> f64 {
    seconds / 60.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DutyCycle {
    pub work_duration_s: f64,
    pub rest_duration_s: f64,
    /// Load held during each work phase, N·m.
    pub work_torque: BTreeMap<FlexionJoint, f64>,
    pub n_cycles: usize,
}

impl DutyCycle {
    pub fn validate(&self) -> Result<()> {
        if !(self.work_duration_s > 0.0 && self.work_duration_s.is_finite()) {
            return Err(domain(format!("work duration must be positive, got {}", self.work_duration_s)));
        }
        if !(self.rest_duration_s >= 0.0 && self.rest_duration_s.is_finite()) {
            return Err(domain(format!("rest duration must be non-negative, got {}", self.rest_duration_s)));
        }
        if self.n_cycles == 0 {
            return Err(domain("a duty cycle needs at least one repetition"));
        }
        for (joint, &torque) in &self.work_torque {
            if !(torque >= 0.0 && torque.is_finite()) {
                return Err(domain(format!("{} work torque must be non-negative, got {torque}", joint.name())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleRecord {
    pub cycle: usize,
    pub joint: FlexionJoint,
    pub t_start_s: f64,
    pub cap_start: f64,
    pub cap_after_work: f64,
    pub cap_after_rest: f64,
    /// Seconds into the work phase at which capacity reached the load.
    pub aborted_at_s: Option<f64>,
    pub cumulative: bool,
}

impl CycleRecord {
    pub fn flag(&self) -> &'static str {
        match (self.aborted_at_s.is_some(), self.cumulative) {
            (false, false) => "ok",
            (false, true) => "cumulative",
            (true, false) => "aborted",
            (true, true) => "aborted+cumulative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    #[default]
    Nearest,
    Floor,
}

impl FromStr for Rounding {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(Rounding::Nearest),
            "floor" => Ok(Rounding::Floor),
            other => Err(domain(format!("unknown rounding '{other}', expected nearest or floor"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum UnitCount {
    Finite(u64),
    /// No joint is loaded, so work can continue indefinitely.
    Unbounded,
}

impl fmt::Display for UnitCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitCount::Finite(n) => write!(f, "{n}"),
            UnitCount::Unbounded => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    /// Cycle-major, joints in a fixed order within each cycle.
    pub records: Vec<CycleRecord>,
    pub cumulative_fatigue: bool,
    /// Joint with the shortest endurance under the work torque.
    pub limiting_joint: Option<FlexionJoint>,
    /// Work units of one work phase each, under continuous work.
    pub completable_units: UnitCount,
}

impl ScheduleReport {
    pub fn joint_records(&self, joint: FlexionJoint) -> impl Iterator<Item = &CycleRecord> {
        self.records.iter().filter(move |r| r.joint == joint)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "cycle",
            "joint",
            "t_start_s",
            "cap_start_Nm",
            "cap_after_work_Nm",
            "cap_after_rest_Nm",
            "flag",
        ])
        .map_err(csv_err)?;
        for r in &self.records {
            w.write_record([
                r.cycle.to_string(),
                r.joint.name().to_string(),
                format!("{:.3}", r.t_start_s),
                format!("{:.6}", r.cap_start),
                format!("{:.6}", r.cap_after_work),
                format!("{:.6}", r.cap_after_rest),
                r.flag().to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn params_for(params: &JointParams, joint: FlexionJoint) -> Result<&CapacityParams> {
    params
        .get(&joint)
        .ok_or_else(|| domain(format!("no capacity parameters for {}", joint.name())))
}

pub fn simulate_duty_cycle(params: &JointParams, cycle: &DutyCycle) -> Result<ScheduleReport> {
    simulate_duty_cycle_with(params, cycle, Rounding::Nearest)
}

pub fn simulate_duty_cycle_with(
    params: &JointParams,
    cycle: &DutyCycle,
    rounding: Rounding,
) -> Result<ScheduleReport> {
    cycle.validate()?;
    let mut per_joint: Vec<Vec<CycleRecord>> = Vec::new();
    for (&joint, &load) in &cycle.work_torque {
        let p = params_for(params, joint)?;
        let mut cap = p.gamma_max;
        let mut t = 0.0;
        let mut previous_rest_end = p.gamma_max;
        let mut rows = Vec::with_capacity(cycle.n_cycles);
        for n in 0..cycle.n_cycles {
            let start = cap;
            let mut work_s = cycle.work_duration_s;
            let mut aborted_at_s = None;
            if load > 0.0 {
                // Time for c·exp(-a t) to reach the load.
                let a = p.fatigue_rate * load / p.gamma_max;
                let crossing_s = if start > load { (start / load).ln() / a * 60.0 } else { 0.0 };
                if crossing_s < work_s {
                    aborted_at_s = Some(crossing_s);
                    work_s = crossing_s;
                }
            }
            let after_work = match aborted_at_s {
                Some(_) => load.min(start),
                None => decay_capacity(p, start, load, minutes(work_s))?,
            };
            let after_rest = recover_capacity(p, after_work, minutes(cycle.rest_duration_s))?;
            let cumulative = after_rest < previous_rest_end - CUMULATIVE_TOLERANCE * p.gamma_max;
            rows.push(CycleRecord {
                cycle: n,
                joint,
                t_start_s: t,
                cap_start: start,
                cap_after_work: after_work,
                cap_after_rest: after_rest,
                aborted_at_s,
                cumulative,
            });
            previous_rest_end = after_rest;
            cap = after_rest;
            t += work_s + cycle.rest_duration_s;
        }
        per_joint.push(rows);
    }
    let mut records = Vec::with_capacity(cycle.n_cycles * per_joint.len());
    for n in 0..cycle.n_cycles {
        records.extend(per_joint.iter().map(|rows| rows[n]));
    }
    let cumulative_fatigue = records.iter().any(|r| r.cumulative);
    Ok(ScheduleReport {
        records,
        cumulative_fatigue,
        limiting_joint: limiting_joint(params, &cycle.work_torque)?,
        completable_units: count_completable_units(params, &cycle.work_torque, cycle.work_duration_s, rounding)?,
    })
}

/// Endurance in seconds, `None` for an unloaded joint.
pub fn endurance_seconds(params: &CapacityParams, load: f64) -> Result<Option<f64>> {
    if load > 0.0 {
        Ok(Some(endurance_time(params, load)? * 60.0))
    } else if load == 0.0 {
        Ok(None)
    } else {
        Err(domain(format!("load must be non-negative, got {load}")))
    }
}

/// The joint that tires first; ties go to the first joint in order.
pub fn limiting_joint(
    params: &JointParams,
    loads: &BTreeMap<FlexionJoint, f64>,
) -> Result<Option<FlexionJoint>> {
    let mut best: Option<(FlexionJoint, f64)> = None;
    for (&joint, &load) in loads {
        if let Some(t) = endurance_seconds(params_for(params, joint)?, load)? {
            if best.map_or(true, |(_, b)| t < b) {
                best = Some((joint, t));
            }
        }
    }
    Ok(best.map(|(j, _)| j))
}

/// Units of `unit_duration_s` that fit into the shortest endurance.
pub fn count_completable_units(
    params: &JointParams,
    unit_torque: &BTreeMap<FlexionJoint, f64>,
    unit_duration_s: f64,
    rounding: Rounding,
) -> Result<UnitCount> {
    if !(unit_duration_s > 0.0 && unit_duration_s.is_finite()) {
        return Err(domain(format!("unit duration must be positive, got {unit_duration_s}")));
    }
    let mut shortest: Option<f64> = None;
    for (&joint, &load) in unit_torque {
        if let Some(t) = endurance_seconds(params_for(params, joint)?, load)? {
            shortest = Some(shortest.map_or(t, |s| s.min(t)));
        }
    }
    Ok(match shortest {
        None => UnitCount::Unbounded,
        Some(t) => {
            let ratio = t / unit_duration_s;
            let n = match rounding {
                Rounding::Nearest => ratio.round(),
                Rounding::Floor => ratio.floor(),
            };
            UnitCount::Finite(n as u64)
        }
    })
}

/// Seconds of rest needed to get back to `p · Γ_max`.
pub fn recommend_rest(params: &CapacityParams, gamma_cem_after_work: f64, p: f64) -> Result<f64> {
    Ok(recovery_time_to_fraction(params, gamma_cem_after_work, p)? * 60.0)
}
