//! Scenario-level pipelines behind the command-line front end: endurance
//! tables, work/rest schedules and distance sweeps, with CSV and text
//! renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::fatigue::{decay_capacity, fatigue_index, recovery_time_to_fraction, LoadSegment};
use crate::kinematics::{FlexionJoint, PostureVector};
use crate::posture::{sweep_distance, SweepResult, SweepSetup};
use crate::scenario::Scenario;
use crate::schedule::{
    count_completable_units, endurance_seconds, limiting_joint, recommend_rest, simulate_duty_cycle_with, JointParams,
    Rounding, ScheduleReport, UnitCount,
};
use crate::strength::{joint_strength, percentile_strength, Percentile, StrengthModel};

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    match v {
        Some(x) => format!("{x:.digits$}"),
        None => "inf".to_string(),
    }
}

/// Strength of each flexion joint for one population band.
pub fn band_params(scenario: &Scenario, model: &StrengthModel, q: &PostureVector, z: Percentile) -> Result<JointParams> {
    FlexionJoint::ALL
        .iter()
        .map(|&j| {
            let s = joint_strength(model, j, q)?;
            Ok((j, scenario.capacity_params(percentile_strength(s.mean, s.sd, z)?)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnduranceRow {
    pub joint: FlexionJoint,
    pub percentile: Percentile,
    pub strength_nm: f64,
    pub load_nm: f64,
    /// `None` for an unloaded joint.
    pub endurance_s: Option<f64>,
    /// Fatigue index after one work unit.
    pub fatigue_index: f64,
    pub capacity_after_unit_nm: f64,
    /// Rest needed after one work unit to reach the recovery target.
    pub recovery_s: f64,
    pub limiting_joint: Option<FlexionJoint>,
    pub units: UnitCount,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnduranceReport {
    pub name: String,
    pub posture: PostureVector,
    pub loads: BTreeMap<FlexionJoint, f64>,
    pub unit_duration_s: f64,
    pub rows: Vec<EnduranceRow>,
}

pub fn endurance_report(scenario: &Scenario, rounding: Rounding) -> Result<EnduranceReport> {
    let chain = scenario.chain()?;
    let q = scenario.posture_vector(&chain)?;
    let loads = scenario.joint_loads()?;
    let model = scenario.strength_model()?;
    let unit_min = scenario.unit_duration_s / 60.0;
    let mut rows = Vec::new();
    for &z in &scenario.percentiles {
        let params = band_params(scenario, &model, &q, z)?;
        let limiting = limiting_joint(&params, &loads)?;
        let units = count_completable_units(&params, &loads, scenario.unit_duration_s, rounding)?;
        for joint in FlexionJoint::ALL {
            let p = params[&joint];
            let load = loads[&joint];
            let after = decay_capacity(&p, p.gamma_max, load, unit_min)?;
            rows.push(EnduranceRow {
                joint,
                percentile: z,
                strength_nm: p.gamma_max,
                load_nm: load,
                endurance_s: endurance_seconds(&p, load)?,
                fatigue_index: fatigue_index(&p, &[LoadSegment::work(load, unit_min)?], scenario.fatigue.index_form),
                capacity_after_unit_nm: after,
                recovery_s: recovery_time_to_fraction(&p, after, scenario.fatigue.recovery_fraction)? * 60.0,
                limiting_joint: limiting,
                units,
            });
        }
    }
    Ok(EnduranceReport {
        name: scenario.name.clone().unwrap_or_else(|| "scenario".to_string()),
        posture: q,
        loads,
        unit_duration_s: scenario.unit_duration_s,
        rows,
    })
}

impl EnduranceReport {
    pub fn row(&self, joint: FlexionJoint, z: Percentile) -> Option<&EnduranceRow> {
        self.rows.iter().find(|r| r.joint == joint && r.percentile == z)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "joint",
            "percentile_z",
            "strength_Nm",
            "load_Nm",
            "endurance_s",
            "endurance_min",
            "fatigue_index",
            "capacity_after_unit_Nm",
            "recovery_s",
            "limiting_joint",
            "units",
        ])
        .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.joint.name().to_string(),
                r.percentile.z().to_string(),
                format!("{:.3}", r.strength_nm),
                format!("{:.3}", r.load_nm),
                fmt_opt(r.endurance_s, 3),
                fmt_opt(r.endurance_s.map(|s| s / 60.0), 4),
                format!("{:.4}", r.fatigue_index),
                format!("{:.3}", r.capacity_after_unit_nm),
                format!("{:.3}", r.recovery_s),
                r.limiting_joint.map_or("none", |j| j.name()).to_string(),
                r.units.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let deg = self.posture.degrees();
        let _ = writeln!(s, "Endurance: {}", self.name);
        let _ = writeln!(
            s,
            "posture q = [{}] deg; loads shoulder {:.3} N·m, elbow {:.3} N·m; unit {} s",
            deg.iter().map(|d| format!("{d:.2}")).collect::<Vec<_>>().join(", "),
            self.loads[&FlexionJoint::Shoulder],
            self.loads[&FlexionJoint::Elbow],
            self.unit_duration_s
        );
        let _ = writeln!(
            s,
            "{:<17} {:>5} {:>10} {:>12} {:>10} {:>8} {:>11} {:>17} {:>6}",
            "joint", "band", "strength", "endurance_s", "min", "U", "recovery_s", "limiting", "units"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<17} {:>5} {:>10.3} {:>12} {:>10} {:>8.4} {:>11.3} {:>17} {:>6}",
                r.joint.name(),
                r.percentile.label(),
                r.strength_nm,
                fmt_opt(r.endurance_s, 3),
                fmt_opt(r.endurance_s.map(|x| x / 60.0), 4),
                r.fatigue_index,
                r.recovery_s,
                r.limiting_joint.map_or("none", |j| j.name()),
                r.units.to_string()
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleRun {
    pub percentile: Percentile,
    pub report: ScheduleReport,
    /// Rest after one work phase from a fresh joint, seconds.
    pub recommended_rest_s: BTreeMap<FlexionJoint, f64>,
}

pub fn schedule_runs(scenario: &Scenario, rounding: Rounding) -> Result<Vec<ScheduleRun>> {
    let chain = scenario.chain()?;
    let q = scenario.posture_vector(&chain)?;
    let cycle = scenario.duty_cycle()?;
    let model = scenario.strength_model()?;
    scenario
        .percentiles
        .iter()
        .map(|&z| {
            let params = band_params(scenario, &model, &q, z)?;
            let report = simulate_duty_cycle_with(&params, &cycle, rounding)?;
            let mut rest = BTreeMap::new();
            for (&joint, &load) in &cycle.work_torque {
                let p = params[&joint];
                let after = decay_capacity(&p, p.gamma_max, load, cycle.work_duration_s / 60.0)?;
                rest.insert(joint, recommend_rest(&p, after, scenario.fatigue.recovery_fraction)?);
            }
            Ok(ScheduleRun {
                percentile: z,
                report,
                recommended_rest_s: rest,
            })
        })
        .collect()
}

pub fn schedule_text(name: &str, runs: &[ScheduleRun]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Schedule: {name}");
    for run in runs {
        let r = &run.report;
        let _ = writeln!(
            s,
            "band {}: cumulative fatigue {}; limiting joint {}; completable units {}",
            run.percentile.label(),
            if r.cumulative_fatigue { "yes" } else { "no" },
            r.limiting_joint.map_or("none", |j| j.name()),
            r.completable_units
        );
        for (joint, rest) in &run.recommended_rest_s {
            let _ = writeln!(s, "  recommended rest {}: {:.3} s ({:.4} min)", joint.name(), rest, rest / 60.0);
        }
        let _ = writeln!(
            s,
            "  {:>5} {:<17} {:>10} {:>10} {:>10} {:>10}  flag",
            "cycle", "joint", "t_start_s", "start", "after_work", "after_rest"
        );
        for rec in &r.records {
            let _ = writeln!(
                s,
                "  {:>5} {:<17} {:>10.1} {:>10.3} {:>10.3} {:>10.3}  {}",
                rec.cycle,
                rec.joint.name(),
                rec.t_start_s,
                rec.cap_start,
                rec.cap_after_work,
                rec.cap_after_rest,
                rec.flag()
            );
        }
    }
    s
}

/// Distance sweep with the scenario's hand load and discomfort settings.
pub fn posture_sweep(scenario: &Scenario) -> Result<SweepResult> {
    let chain = scenario.chain()?;
    let segments = scenario.segments()?;
    let strength = scenario.strength_model()?;
    let discomfort = scenario.discomfort_params();
    let setup = SweepSetup {
        chain: &chain,
        segments: &segments,
        wrench: scenario.wrench(),
        gravity: scenario.segment_gravity(),
        strength: &strength,
        discomfort: &discomfort,
    };
    sweep_distance(&setup, &scenario.sweep, &scenario.weights)
}

pub fn sweep_text(name: &str, result: &SweepResult) -> String {
    let mut s = String::new();
    let o = &result.optimum;
    let _ = writeln!(s, "Posture sweep: {name}");
    let _ = writeln!(
        s,
        "weights w1 = {}, w2 = {}; normalizers stress {:.6e}, discomfort {:.6e}",
        result.weights.w1, result.weights.w2, result.normalizers.stress, result.normalizers.discomfort
    );
    let _ = writeln!(
        s,
        "optimum distance {:.4} m: shoulder flexion {:.2} deg, elbow flexion {:.2} deg, stress {:.4}, objective {:.4}",
        o.distance,
        o.posture.shoulder_flexion_deg(),
        o.posture.elbow_flexion_deg(),
        o.stress_mean,
        o.objective
    );
    let _ = writeln!(
        s,
        "{:>10} {:>9} {:>9} {:>12} {:>12} {:>12} {:>10}",
        "distance_m", "q1_deg", "q4_deg", "stress", "disc_sh", "disc_el", "objective"
    );
    for (p, obj) in result.points.iter().zip(&result.objective) {
        let deg = p.posture.degrees();
        let _ = writeln!(
            s,
            "{:>10.4} {:>9.3} {:>9.3} {:>12.6} {:>12.4e} {:>12.4e} {:>10.4}",
            p.distance, deg[0], deg[3], p.stress_mean, p.discomfort_shoulder, p.discomfort_elbow, obj
        );
    }
    s
}
