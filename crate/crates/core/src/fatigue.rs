//! Joint-level fatigue and recovery dynamics.
//!
//! The remaining strength of a joint, `Γ_cem`, decays under a constant load
//! torque `Γ` according to
//!
//! ```text
//! dΓ_cem/dt = -k · (Γ_cem / Γ_max) · Γ
//! ```
//!
//! and recovers at rest towards the fresh strength `Γ_max`:
//!
//! ```text
//! dΓ_cem/dt = R · (Γ_max - Γ_cem)
//! ```
//!
//! Both equations have exact solutions for piecewise-constant loads, so every
//! operation here is closed form. Time is in minutes throughout this module;
//! conversion to seconds happens at the reporting boundary.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Default fatigue rate `k`, min⁻¹.
pub const DEFAULT_FATIGUE_RATE: f64 = 1.0;
/// Default recovery rate `R`, min⁻¹.
pub const DEFAULT_RECOVERY_RATE: f64 = 2.4;
/// Recovery target used for rest recommendations.
pub const DEFAULT_RECOVERY_FRACTION: f64 = 0.99;

/// Strength ceiling and rate constants of one joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityParams {
    /// Maximum joint strength `Γ_max`, N·m.
    pub gamma_max: f64,
    /// Fatigue rate `k`, min⁻¹.
    pub fatigue_rate: f64,
    /// Recovery rate `R`, min⁻¹.
    pub recovery_rate: f64,
}

impl CapacityParams {
    /// Parameters with the default rates `k = 1`, `R = 2.4` min⁻¹.
    pub fn new(gamma_max: f64) -> Result<Self> {
        Self::with_rates(gamma_max, DEFAULT_FATIGUE_RATE, DEFAULT_RECOVERY_RATE)
    }

    pub fn with_rates(gamma_max: f64, fatigue_rate: f64, recovery_rate: f64) -> Result<Self> {
        if !(gamma_max > 0.0 && gamma_max.is_finite()) {
            return Err(domain(format!("gamma_max must be positive, got {gamma_max}")));
        }
        if !(fatigue_rate > 0.0 && fatigue_rate.is_finite()) {
            return Err(domain(format!("fatigue rate must be positive, got {fatigue_rate}")));
        }
        if !(recovery_rate > 0.0 && recovery_rate.is_finite()) {
            return Err(domain(format!("recovery rate must be positive, got {recovery_rate}")));
        }
        Ok(Self {
            gamma_max,
            fatigue_rate,
            recovery_rate,
        })
    }
}

/// Remaining strength and accumulated fatigue index at time `t` (minutes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointCapacityState {
    pub gamma_cem: f64,
    pub u_index: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Work,
    Rest,
}

/// A stretch of constant joint load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadSegment {
    kind: SegmentKind,
    gamma_load: f64,
    duration: f64,
}

impl LoadSegment {
    /// A work segment holding `gamma_load` N·m for `duration` minutes.
    pub fn work(gamma_load: f64, duration: f64) -> Result<Self> {
        if !(gamma_load >= 0.0 && gamma_load.is_finite()) {
            return Err(domain(format!("load must be non-negative, got {gamma_load}")));
        }
        check_duration(duration)?;
        Ok(Self {
            kind: SegmentKind::Work,
            gamma_load,
            duration,
        })
    }

    pub fn rest(duration: f64) -> Result<Self> {
        check_duration(duration)?;
        Ok(Self {
            kind: SegmentKind::Rest,
            gamma_load: 0.0,
            duration,
        })
    }

    pub fn kind(&self) -> SegmentKind {
        self.kind
    }

    pub fn gamma_load(&self) -> f64 {
        self.gamma_load
    }

    /// Duration in minutes.
    pub fn duration(&self) -> f64 {
        self.duration
    }
}

fn check_duration(duration: f64) -> Result<()> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(domain(format!("segment duration must be positive, got {duration}")));
    }
    Ok(())
}

/// Which fatigue-index integrand to accumulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexForm {
    /// `U = ∫ Γ/Γ_max dt`.
    #[default]
    Linear,
    /// `U = ∫ (Γ_max/Γ_cem)·(Γ/Γ_cem) dt`, with `Γ_cem` following the decay law.
    EquationLiteral,
}

/// Strength remaining after holding `gamma_load` for `duration` minutes.
///
/// ```
/// use jointfatigue::fatigue::{decay_capacity, CapacityParams};
///
/// let params = CapacityParams::new(75.620).unwrap();
/// let left = decay_capacity(&params, 75.620, 26.873, 0.5).unwrap();
/// assert!((left - 63.310).abs() < 1e-3);
/// ```
pub fn decay_capacity(
    params: &CapacityParams,
    gamma_cem0: f64,
    gamma_load: f64,
    duration: f64,
) -> Result<f64> {
    if !(gamma_cem0 > 0.0) {
        return Err(domain(format!("initial capacity must be positive, got {gamma_cem0}")));
    }
    if gamma_cem0 > params.gamma_max * (1.0 + 1e-12) {
        return Err(domain(format!(
            "initial capacity {gamma_cem0} exceeds gamma_max {}",
            params.gamma_max
        )));
    }
    if !(gamma_load >= 0.0) {
        return Err(domain(format!("load must be non-negative, got {gamma_load}")));
    }
    if !(duration >= 0.0) {
        return Err(domain(format!("duration must be non-negative, got {duration}")));
    }
    let rate = params.fatigue_rate * gamma_load / params.gamma_max;
    Ok(gamma_cem0 * (-rate * duration).exp())
}

/// Strength after resting for `duration` minutes starting from `gamma_cem0`.
pub fn recover_capacity(params: &CapacityParams, gamma_cem0: f64, duration: f64) -> Result<f64> {
    let gmax = params.gamma_max;
    if !(gamma_cem0 >= 0.0) {
        return Err(domain(format!("capacity must be non-negative, got {gamma_cem0}")));
    }
    if gamma_cem0 > gmax * (1.0 + 1e-12) {
        return Err(domain(format!("capacity {gamma_cem0} exceeds gamma_max {gmax}")));
    }
    if !(duration >= 0.0) {
        return Err(domain(format!("duration must be non-negative, got {duration}")));
    }
    let recovered = gmax + (gamma_cem0 - gmax) * (-params.recovery_rate * duration).exp();
    Ok(recovered.min(gmax))
}

/// Minutes until a fresh joint can no longer sustain `gamma_load`.
///
/// Returns `0` when the load already meets or exceeds `Γ_max`. A
/// non-positive load has no finite endurance and is rejected; reports show it
/// as an unbounded sentinel.
pub fn endurance_time(params: &CapacityParams, gamma_load: f64) -> Result<f64> {
    if !(gamma_load > 0.0) {
        return Err(domain(format!(
            "endurance is unbounded for non-positive load {gamma_load}"
        )));
    }
    let gmax = params.gamma_max;
    if gamma_load >= gmax {
        return Ok(0.0);
    }
    Ok(gmax / (params.fatigue_rate * gamma_load) * (gmax / gamma_load).ln())
}

/// Minutes of rest needed to climb from `gamma_cem0` back to `p · Γ_max`.
pub fn recovery_time_to_fraction(params: &CapacityParams, gamma_cem0: f64, p: f64) -> Result<f64> {
    let gmax = params.gamma_max;
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!(
            "recovery fraction must lie in (0, 1), got {p}; full recovery is only asymptotic"
        )));
    }
    if !(gamma_cem0 >= 0.0) || gamma_cem0 > gmax * (1.0 + 1e-12) {
        return Err(domain(format!(
            "capacity {gamma_cem0} outside [0, {gmax}]"
        )));
    }
    if gamma_cem0 >= p * gmax {
        return Ok(0.0);
    }
    Ok(((gmax - gamma_cem0) / ((1.0 - p) * gmax)).ln() / params.recovery_rate)
}

/// Fatigue index accumulated over `segments`, starting from a fresh joint.
pub fn fatigue_index(params: &CapacityParams, segments: &[LoadSegment], form: IndexForm) -> f64 {
    match form {
        IndexForm::Linear => segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Work)
            .map(|s| s.gamma_load / params.gamma_max * s.duration)
            .sum(),
        IndexForm::EquationLiteral => {
            let gmax = params.gamma_max;
            let mut capacity = gmax;
            let mut index = 0.0;
            for seg in segments {
                match seg.kind {
                    SegmentKind::Work => {
                        if seg.gamma_load > 0.0 {
                            // Γ_cem = c0·exp(-a t) makes the integrand grow as exp(2 a t).
                            let a = params.fatigue_rate * seg.gamma_load / gmax;
                            index += gmax * gmax / (2.0 * params.fatigue_rate * capacity * capacity)
                                * ((2.0 * a * seg.duration).exp() - 1.0);
                            capacity *= (-a * seg.duration).exp();
                        }
                    }
                    SegmentKind::Rest => {
                        capacity =
                            gmax + (capacity - gmax) * (-params.recovery_rate * seg.duration).exp();
                    }
                }
            }
            index
        }
    }
}

/// Samples the exact capacity trajectory every `sample_dt` minutes.
///
/// Segment boundaries are always included, so the first state is the fresh
/// joint at `t = 0` and the last state is the end of the final segment. The
/// fatigue index uses the linear form.
pub fn integrate_trajectory(
    params: &CapacityParams,
    segments: &[LoadSegment],
    sample_dt: f64,
) -> Result<Vec<JointCapacityState>> {
    if !(sample_dt > 0.0 && sample_dt.is_finite()) {
        return Err(domain(format!("sample_dt must be positive, got {sample_dt}")));
    }
    let mut states = vec![JointCapacityState {
        gamma_cem: params.gamma_max,
        u_index: 0.0,
        t: 0.0,
    }];
    let mut t0 = 0.0;
    let mut cap0 = params.gamma_max;
    let mut u0 = 0.0;
    for seg in segments {
        let at = |tau: f64| -> Result<(f64, f64)> {
            match seg.kind {
                SegmentKind::Work => Ok((
                    decay_capacity(params, cap0, seg.gamma_load, tau)?,
                    u0 + seg.gamma_load / params.gamma_max * tau,
                )),
                SegmentKind::Rest => Ok((recover_capacity(params, cap0, tau)?, u0)),
            }
        };
        let steps = (seg.duration / sample_dt).ceil() as usize;
        for i in 1..steps {
            let tau = i as f64 * sample_dt;
            let (gamma_cem, u_index) = at(tau)?;
            states.push(JointCapacityState {
                gamma_cem,
                u_index,
                t: t0 + tau,
            });
        }
        let (gamma_cem, u_index) = at(seg.duration)?;
        t0 += seg.duration;
        states.push(JointCapacityState {
            gamma_cem,
            u_index,
            t: t0,
        });
        cap0 = gamma_cem;
        u0 = u_index;
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn shoulder() -> CapacityParams {
        CapacityParams::new(75.620).unwrap()
    }

    #[test]
    fn decay_matches_frozen_values() {
        // Frozen from an adaptive ODE integration of the decay law (rtol 1e-12).
        let p = shoulder();
        assert_relative_eq!(
            decay_capacity(&p, 75.620, 26.873, 0.5).unwrap(),
            63.309558661208,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            decay_capacity(&p, 75.620, 23.043, 0.5).unwrap(),
            64.933281989187,
            max_relative = 1e-9
        );
    }

    #[test]
    fn zero_load_leaves_capacity_unchanged() {
        let p = shoulder();
        assert_eq!(decay_capacity(&p, 50.0, 0.0, 123.0).unwrap(), 50.0);
    }

    #[test]
    fn decay_rejects_non_positive_capacity() {
        let p = shoulder();
        assert!(decay_capacity(&p, 0.0, 10.0, 1.0).is_err());
        assert!(decay_capacity(&p, -1.0, 10.0, 1.0).is_err());
        assert!(CapacityParams::new(0.0).is_err());
        assert!(CapacityParams::with_rates(10.0, 0.0, 2.4).is_err());
    }

    #[test]
    fn recovery_fixed_point_and_asymptote() {
        let p = shoulder();
        assert_eq!(recover_capacity(&p, 75.620, 3.0).unwrap(), 75.620);
        assert_relative_eq!(recover_capacity(&p, 63.310, 1e3).unwrap(), 75.620);
        assert_relative_eq!(
            recover_capacity(&p, 63.309558661208, 0.5).unwrap(),
            71.912166322661,
            max_relative = 1e-9
        );
        assert!(recover_capacity(&p, 80.0, 1.0).is_err());
    }

    #[test]
    fn endurance_matches_published_cells() {
        let e = endurance_time(&shoulder(), 23.043).unwrap() * 60.0;
        assert_relative_eq!(e, 233.984, max_relative = 5e-3);
        let weak = CapacityParams::new(75.620 - 2.0 * 17.476).unwrap();
        assert_relative_eq!(endurance_time(&weak, 23.043).unwrap() * 60.0, 60.155, max_relative = 5e-3);
        let elbow = CapacityParams::new(75.141).unwrap();
        assert_relative_eq!(endurance_time(&elbow, 7.394).unwrap() * 60.0, 1413.831, max_relative = 5e-3);
    }

    #[test]
    fn endurance_edge_cases() {
        let p = shoulder();
        assert_eq!(endurance_time(&p, 75.620).unwrap(), 0.0);
        assert_eq!(endurance_time(&p, 100.0).unwrap(), 0.0);
        assert!(endurance_time(&p, 0.0).is_err());
        assert!(endurance_time(&p, -3.0).is_err());
    }

    #[test]
    fn recovery_time_cells() {
        let p = shoulder();
        let t = recovery_time_to_fraction(&p, 63.310, 0.99).unwrap() * 60.0;
        assert!((t - 69.815).abs() < 1.0, "{t}");
        let elbow_weak = CapacityParams::new(38.201).unwrap();
        let t = recovery_time_to_fraction(&elbow_weak, 33.660, 0.99).unwrap() * 60.0;
        assert!((t - 61.945).abs() < 0.1, "{t}");
    }

    #[test]
    fn recovery_time_boundaries() {
        let p = shoulder();
        assert_eq!(recovery_time_to_fraction(&p, 0.9 * 75.620, 0.9).unwrap(), 0.0);
        assert_eq!(recovery_time_to_fraction(&p, 75.0, 0.9).unwrap(), 0.0);
        assert!(recovery_time_to_fraction(&p, 10.0, 1.0).is_err());
        assert!(recovery_time_to_fraction(&p, 10.0, 0.0).is_err());
    }

    #[test]
    fn linear_index_cells() {
        let seg = [LoadSegment::work(23.043, 0.5).unwrap()];
        let u = fatigue_index(&shoulder(), &seg, IndexForm::Linear);
        assert!((u - 0.152).abs() < 2e-3);
        let weak = CapacityParams::new(40.668).unwrap();
        let seg = [LoadSegment::work(26.873, 0.5).unwrap()];
        assert!((fatigue_index(&weak, &seg, IndexForm::Linear) - 0.330).abs() < 2e-3);
        assert_eq!(fatigue_index(&weak, &[], IndexForm::Linear), 0.0);
    }

    #[test]
    fn literal_index_exceeds_linear_under_decay() {
        // Γ_max/Γ_cem ≥ 1 along a work bout, so the literal form dominates.
        let p = shoulder();
        let seg = [LoadSegment::work(23.043, 0.5).unwrap()];
        let lin = fatigue_index(&p, &seg, IndexForm::Linear);
        let lit = fatigue_index(&p, &seg, IndexForm::EquationLiteral);
        assert!(lit > lin);
        // Midpoint quadrature of the literal integrand.
        let n = 200_000;
        let dt = 0.5 / n as f64;
        let a = 23.043 / 75.620;
        let quad: f64 = (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) * dt;
                let cap = 75.620 * (-a * t).exp();
                75.620 / cap * 23.043 / cap * dt
            })
            .sum();
        assert_relative_eq!(lit, quad, max_relative = 1e-8);
    }

    #[test]
    fn rest_trajectory_is_flat() {
        let p = shoulder();
        let traj = integrate_trajectory(&p, &[LoadSegment::rest(1.0).unwrap()], 0.1).unwrap();
        assert!(traj.iter().all(|s| s.gamma_cem == 75.620));
        assert_eq!(traj.len(), 11);
    }

    #[test]
    fn trajectory_endpoints_compose_closed_forms() {
        let p = shoulder();
        let work = LoadSegment::work(26.873, 0.5).unwrap();
        let traj = integrate_trajectory(&p, &[work], 0.01).unwrap();
        assert_relative_eq!(traj.last().unwrap().gamma_cem, 63.309558661208, max_relative = 1e-9);

        let traj =
            integrate_trajectory(&p, &[work, LoadSegment::rest(0.5).unwrap()], 0.03).unwrap();
        let end = traj.last().unwrap();
        assert_relative_eq!(end.gamma_cem, 71.912166322661, max_relative = 1e-9);
        assert_relative_eq!(end.t, 1.0);
        assert!(traj.windows(2).all(|w| w[0].t < w[1].t));
        assert!(traj.windows(2).all(|w| w[0].u_index <= w[1].u_index));
    }

    #[test]
    fn segments_validate() {
        assert!(LoadSegment::work(1.0, 0.0).is_err());
        assert!(LoadSegment::work(-1.0, 1.0).is_err());
        assert!(LoadSegment::rest(-1.0).is_err());
        assert!(integrate_trajectory(&shoulder(), &[], 0.0).is_err());
    }
}
