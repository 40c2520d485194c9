//! Regenerates the published drilling endurance table from the bundled
//! scenarios and compares every cell with its stored value.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::kinematics::FlexionJoint;
use crate::report::{endurance_report, EnduranceReport};
use crate::scenario::Scenario;
use crate::schedule::{Rounding, UnitCount};
use crate::strength::Percentile;

pub const GOLDEN_CSV: &str = include_str!("../data/golden_table.csv");

/// Hole-count cells that must match exactly, out of ten.
pub const EXACT_UNITS_REQUIRED: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    EnduranceS,
    FatigueIndex,
    Units,
    RecoveryS,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::EnduranceS => "endurance_s",
            Quantity::FatigueIndex => "fatigue_index",
            Quantity::Units => "units",
            Quantity::RecoveryS => "recovery_s",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceKind {
    Relative,
    Absolute,
}

#[derive(Debug, Clone, Deserialize)]
struct GoldenRow {
    quantity: Quantity,
    tool_kg: f64,
    joint: String,
    percentile_z: i32,
    expected: f64,
    tolerance_kind: ToleranceKind,
    tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReproduceOptions {
    /// Replaces the fatigue rate of the bundled scenarios.
    pub fatigue_rate: Option<f64>,
    pub rounding: Rounding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub quantity: Quantity,
    pub tool_kg: f64,
    pub joint: Option<FlexionJoint>,
    pub percentile: Percentile,
    pub expected: f64,
    pub actual: f64,
    pub tolerance_kind: ToleranceKind,
    pub tolerance: f64,
    pub pass: bool,
}

impl CellResult {
    pub fn deviation(&self) -> f64 {
        match self.tolerance_kind {
            ToleranceKind::Relative => (self.actual - self.expected).abs() / self.expected.abs(),
            ToleranceKind::Absolute => (self.actual - self.expected).abs(),
        }
    }

    pub fn id(&self) -> String {
        format!(
            "{}/{}kg/{}/{}",
            self.quantity.name(),
            self.tool_kg,
            self.joint.map_or("limiting", |j| j.name()),
            self.percentile.label()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenReport {
    pub cells: Vec<CellResult>,
    pub exact_units: usize,
    pub total_units: usize,
}

impl GoldenReport {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(|c| c.pass) && self.exact_units >= EXACT_UNITS_REQUIRED.min(self.total_units)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(|c| !c.pass)
    }

    /// Cell count and pass count per quantity.
    pub fn census(&self) -> BTreeMap<Quantity, (usize, usize)> {
        let mut m: BTreeMap<Quantity, (usize, usize)> = BTreeMap::new();
        for c in &self.cells {
            let e = m.entry(c.quantity).or_default();
            e.0 += 1;
            e.1 += c.pass as usize;
        }
        m
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Io(e.to_string());
        w.write_record([
            "quantity",
            "tool_kg",
            "joint",
            "percentile_z",
            "expected",
            "actual",
            "deviation",
            "tolerance_kind",
            "tolerance",
            "pass",
        ])
        .map_err(err)?;
        for c in &self.cells {
            w.write_record([
                c.quantity.name().to_string(),
                c.tool_kg.to_string(),
                c.joint.map_or("limiting", |j| j.name()).to_string(),
                c.percentile.z().to_string(),
                c.expected.to_string(),
                format!("{:.6}", c.actual),
                format!("{:.6}", c.deviation()),
                match c.tolerance_kind {
                    ToleranceKind::Relative => "relative",
                    ToleranceKind::Absolute => "absolute",
                }
                .to_string(),
                c.tolerance.to_string(),
                c.pass.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Golden table reproduction");
        for (q, (n, ok)) in self.census() {
            let _ = writeln!(s, "  {:<14} {ok}/{n} within tolerance", q.name());
        }
        let _ = writeln!(
            s,
            "  units exact    {}/{} (at least {} required)",
            self.exact_units, self.total_units, EXACT_UNITS_REQUIRED
        );
        for c in &self.cells {
            if !c.pass || (c.quantity == Quantity::Units && c.actual != c.expected) {
                let _ = writeln!(
                    s,
                    "  {} {}: expected {}, got {:.4}",
                    if c.pass { "off-by-one" } else { "FAIL" },
                    c.id(),
                    c.expected,
                    c.actual
                );
            }
        }
        let _ = writeln!(s, "result: {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

fn scenario_for(tool_kg: f64) -> Result<&'static str> {
    match tool_kg {
        x if x == 2.5 => Ok("drill-2.5kg"),
        x if x == 3.5 => Ok("drill-3.5kg"),
        other => Err(Error::Grid(format!("golden table has no scenario for {other} kg"))),
    }
}

pub fn reproduce(options: &ReproduceOptions) -> Result<GoldenReport> {
    let mut reports: BTreeMap<&str, EnduranceReport> = BTreeMap::new();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(GOLDEN_CSV.as_bytes());
    let mut cells = Vec::new();
    for row in reader.deserialize::<GoldenRow>() {
        let row = row.map_err(|e| Error::Grid(format!("golden table: {e}")))?;
        let name = scenario_for(row.tool_kg)?;
        if !reports.contains_key(name) {
            let mut scenario = Scenario::builtin(name).expect("bundled scenario");
            if let Some(k) = options.fatigue_rate {
                scenario.fatigue.fatigue_rate_per_min = k;
            }
            scenario.validate()?;
            reports.insert(name, endurance_report(&scenario, options.rounding)?);
        }
        let report = &reports[name];
        let z = Percentile::new(row.percentile_z)?;
        let joint = match row.joint.as_str() {
            "all" => None,
            j => Some(j.parse::<FlexionJoint>()?),
        };
        let lookup = joint.unwrap_or(FlexionJoint::Shoulder);
        let r = report
            .row(lookup, z)
            .ok_or_else(|| Error::Grid(format!("no computed row for {} {}", lookup.name(), z.label())))?;
        let actual = match row.quantity {
            Quantity::EnduranceS => r.endurance_s.unwrap_or(f64::INFINITY),
            Quantity::FatigueIndex => r.fatigue_index,
            Quantity::RecoveryS => r.recovery_s,
            Quantity::Units => match r.units {
                UnitCount::Finite(n) => n as f64,
                UnitCount::Unbounded => f64::INFINITY,
            },
        };
        let mut cell = CellResult {
            quantity: row.quantity,
            tool_kg: row.tool_kg,
            joint,
            percentile: z,
            expected: row.expected,
            actual,
            tolerance_kind: row.tolerance_kind,
            tolerance: row.tolerance,
            pass: false,
        };
        cell.pass = cell.deviation() <= row.tolerance;
        cells.push(cell);
    }
    let units: Vec<&CellResult> = cells.iter().filter(|c| c.quantity == Quantity::Units).collect();
    let exact_units = units.iter().filter(|c| c.actual == c.expected).count();
    let total_units = units.len();
    Ok(GoldenReport {
        cells,
        exact_units,
        total_units,
    })
}
