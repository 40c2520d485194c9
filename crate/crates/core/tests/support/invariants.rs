//! Randomized invariants shared by the acceptance run.

use std::collections::BTreeMap;

use jointfatigue::anthropometry::{inertia_tensor, segment_params, ArmSegments, BodyParams, Segment};
use jointfatigue::dynamics::oracle::torque_oracle_jacobian;
use jointfatigue::dynamics::{static_joint_torques, ExternalWrench, STANDARD_GRAVITY};
use jointfatigue::fatigue::{
    decay_capacity, endurance_time, fatigue_index, recover_capacity, recovery_time_to_fraction, CapacityParams,
    IndexForm, LoadSegment,
};
use jointfatigue::kinematics::{
    build_right_arm, default_limits, dh_transform, forward_kinematics, rotation, sagittal_posture_for_distance,
    translation, FlexionJoint, KinematicChain, PostureVector, ARM_JOINTS,
};
use jointfatigue::posture::{
    discomfort_index, evaluate_grid, lower_penalty, normalizers, select_optimum, upper_penalty, DiscomfortParams,
    JointDiscomfort, ObjectiveWeights, SweepRange, SweepSetup,
};
use jointfatigue::report::endurance_report;
use jointfatigue::scenario::{DutyCycleSpec, FatigueSpec, PostureSpec, ProcessForce, Scenario, FORMAT_VERSION};
use jointfatigue::schedule::{count_completable_units, simulate_duty_cycle, DutyCycle, Rounding, UnitCount};
use jointfatigue::strength::{percentile_strength, Percentile, StrengthModel};
use nalgebra::Vector3;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub type Invariant = fn(u32) -> Result<(), String>;

pub const ALL: &[(&str, Invariant)] = &[
    ("decay is a semigroup", decay_semigroup),
    ("recovery is a semigroup", recovery_semigroup),
    ("endurance monotone in load and strength", endurance_monotone),
    ("recovery time round-trips", recovery_round_trip),
    ("fatigue index additive over segments", index_additive),
    ("segment masses split the arm mass", mass_split),
    ("inertia scales with size squared", inertia_scaling),
    ("DH rotations are proper", dh_proper_rotation),
    ("forward kinematics is Lipschitz", fk_lipschitz),
    ("sagittal IK/FK round trip", ik_round_trip),
    ("torques are affine in the wrench", torque_linearity),
    ("Newton-Euler matches the Jacobian oracle", torque_oracle),
    ("force along an axis or lever loads no torque", axis_force),
    ("percentile strength affine and increasing", percentile_affine),
    ("endurance increases with percentile", endurance_in_percentile),
    ("zero rest equals continuous decay", zero_rest_merges),
    ("longer rest never hurts", rest_monotone),
    ("work units non-increasing in torque", units_monotone),
    ("weight scaling keeps the optimum", weight_scaling),
    ("discomfort non-negative, zero only at neutral", discomfort_sign),
    ("limit penalties bounded and extreme at the limits", penalty_bounds),
    ("scenario JSON round-trips", scenario_round_trip),
    ("reports are deterministic", report_determinism),
];

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &[11; 32]))
}

fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= abs + rel * a.abs().max(b.abs())
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(TestCaseError::fail(format!($($msg)+)));
        }
    };
}

fn body() -> BodyParams {
    BodyParams::new(70.0, 1.70).unwrap()
}

pub fn arm() -> (KinematicChain, ArmSegments) {
    let b = body();
    (build_right_arm(&b, &default_limits()).unwrap(), ArmSegments::from_body(&b).unwrap())
}

/// Postures inside the default joint limits.
pub fn posture() -> impl Strategy<Value = PostureVector> {
    let l = default_limits();
    let range = move |i: usize| l[i].lower_deg..=l[i].upper_deg;
    (range(0), range(1), range(2), range(3), range(4))
        .prop_map(|(a, b, c, d, e)| PostureVector::from_degrees([a, b, c, d, e]))
}

pub fn wrench() -> impl Strategy<Value = ExternalWrench> {
    (prop::array::uniform3(-80.0..80.0f64), prop::array::uniform3(-10.0..10.0f64)).prop_map(|(f, m)| ExternalWrench {
        force: Vector3::from(f),
        moment: Vector3::from(m),
    })
}

fn capacity() -> impl Strategy<Value = CapacityParams> {
    (10.0..200.0f64, 0.2..3.0f64, 0.5..5.0f64).prop_map(|(g, k, r)| CapacityParams::with_rates(g, k, r).unwrap())
}

fn decay_semigroup(cases: u32) -> Result<(), String> {
    check(cases, (capacity(), 0.05..1.0f64, 0.0..1.5f64, 0.0..10.0f64, 0.0..10.0f64), |(p, c, l, t1, t2)| {
        let c0 = c * p.gamma_max;
        let load = l * p.gamma_max;
        let whole = decay_capacity(&p, c0, load, t1 + t2).unwrap();
        let split = decay_capacity(&p, decay_capacity(&p, c0, load, t1).unwrap(), load, t2).unwrap();
        ensure!(close(whole, split, 1e-12, 0.0), "{whole} vs {split}");
        Ok(())
    })
}

fn recovery_semigroup(cases: u32) -> Result<(), String> {
    check(cases, (capacity(), 0.0..1.0f64, 0.0..5.0f64, 0.0..5.0f64), |(p, c, t1, t2)| {
        let c0 = c * p.gamma_max;
        let whole = recover_capacity(&p, c0, t1 + t2).unwrap();
        let split = recover_capacity(&p, recover_capacity(&p, c0, t1).unwrap(), t2).unwrap();
        ensure!(close(whole, split, 1e-12, 0.0), "{whole} vs {split}");
        Ok(())
    })
}

fn endurance_monotone(cases: u32) -> Result<(), String> {
    check(cases, (capacity(), 0.01..0.98f64, 1.001..1.5f64), |(p, l, s)| {
        let load = l * p.gamma_max;
        let t = endurance_time(&p, load).unwrap();
        let heavier = endurance_time(&p, (load * s).min(p.gamma_max * 0.999)).unwrap();
        let stronger = CapacityParams { gamma_max: p.gamma_max * s, ..p };
        ensure!(heavier < t, "heavier load lasted longer");
        ensure!(endurance_time(&stronger, load).unwrap() > t, "stronger joint tired sooner");
        Ok(())
    })
}

fn recovery_round_trip(cases: u32) -> Result<(), String> {
    check(cases, (capacity(), 0.0..0.98f64, 0.5..0.999f64), |(p, c, frac)| {
        let c0 = c * p.gamma_max;
        let t = recovery_time_to_fraction(&p, c0, frac).unwrap();
        let reached = recover_capacity(&p, c0, t).unwrap();
        let target = if c0 >= frac * p.gamma_max { c0 } else { frac * p.gamma_max };
        ensure!(close(reached, target, 1e-10, 0.0), "{reached} vs {target}");
        Ok(())
    })
}

fn segments() -> impl Strategy<Value = Vec<LoadSegment>> {
    prop::collection::vec(
        prop_oneof![
            (0.0..100.0f64, 0.0..3.0f64).prop_map(|(l, d)| LoadSegment::work(l, d).unwrap()),
            (0.0..3.0f64).prop_map(|d| LoadSegment::rest(d).unwrap()),
        ],
        0..8,
    )
}

fn index_additive(cases: u32) -> Result<(), String> {
    check(cases, (capacity(), segments(), segments()), |(p, a, b)| {
        let joined: Vec<LoadSegment> = a.iter().chain(&b).copied().collect();
        let sum = fatigue_index(&p, &a, IndexForm::Linear) + fatigue_index(&p, &b, IndexForm::Linear);
        let whole = fatigue_index(&p, &joined, IndexForm::Linear);
        ensure!(close(whole, sum, 1e-12, 1e-15), "{whole} vs {sum}");
        Ok(())
    })
}

fn mass_split(cases: u32) -> Result<(), String> {
    check(cases, (1.0..300.0f64, 0.5..2.5f64), |(m, h)| {
        let b = BodyParams::new(m, h).unwrap();
        let total = segment_params(&b, Segment::UpperArm).unwrap().mass + segment_params(&b, Segment::Forearm).unwrap().mass;
        ensure!(close(total, 0.051 * m, 1e-14, 0.0), "{total} vs {}", 0.051 * m);
        Ok(())
    })
}

fn inertia_scaling(cases: u32) -> Result<(), String> {
    check(cases, (0.1..10.0f64, 0.01..0.2f64, 0.05..0.6f64, 0.1..5.0f64), |(m, r, h, s)| {
        let scaled = inertia_tensor(m, s * r, s * h);
        let base = inertia_tensor(m, r, h) * (s * s);
        for (a, b) in scaled.iter().zip(base.iter()) {
            ensure!(close(*a, *b, 1e-12, 0.0), "{a} vs {b}");
        }
        Ok(())
    })
}

fn dh_proper_rotation(cases: u32) -> Result<(), String> {
    let (chain, _) = arm();
    check(cases, (0..ARM_JOINTS, -10.0..10.0f64), |(i, q)| {
        let t = dh_transform(&chain.rows[i], q);
        let r = rotation(&t);
        ensure!((r.determinant() - 1.0).abs() < 1e-12, "det {}", r.determinant());
        ensure!((r.transpose() * r - nalgebra::Matrix3::identity()).norm() < 1e-12, "not orthonormal");
        Ok(())
    })
}

fn fk_lipschitz(cases: u32) -> Result<(), String> {
    let (chain, _) = arm();
    let bound = chain.upper_arm_length + chain.forearm_length;
    check(cases, (posture(), 0..ARM_JOINTS, -1e-3..1e-3f64), |(q, i, eps)| {
        let hand = |q: &PostureVector| translation(&chain.frames_unchecked(q)[ARM_JOINTS]);
        let mut moved = q;
        moved.0[i] += eps;
        let shift = (hand(&moved) - hand(&q)).norm();
        ensure!(shift <= bound * eps.abs() * (1.0 + 1e-9) + 1e-15, "moved {shift} for {eps}");
        Ok(())
    })
}

fn ik_round_trip(cases: u32) -> Result<(), String> {
    let (chain, _) = arm();
    check(cases, 0.25..0.564f64, |d| {
        let q = sagittal_posture_for_distance(&chain, d).unwrap();
        let frames = forward_kinematics(&chain, &q).unwrap();
        let hand = translation(&frames[ARM_JOINTS]);
        ensure!((hand - Vector3::new(d, 0.0, 0.0)).norm() < 1e-9, "hand at {hand:?} for {d}");
        Ok(())
    })
}

fn torque_linearity(cases: u32) -> Result<(), String> {
    let (chain, seg) = arm();
    check(cases, (posture(), wrench(), wrench()), |(q, a, b)| {
        let g = STANDARD_GRAVITY;
        let tau = |w: &ExternalWrench| static_joint_torques(&chain, &q, &seg, w, g).unwrap();
        let (ta, tb, tab, t0) = (tau(&a), tau(&b), tau(&(a + b)), tau(&ExternalWrench::zero()));
        for i in 0..ARM_JOINTS {
            ensure!((tab[i] - (ta[i] + tb[i] - t0[i])).abs() < 1e-9, "joint {i}");
        }
        Ok(())
    })
}

fn torque_oracle(cases: u32) -> Result<(), String> {
    let (chain, seg) = arm();
    check(cases, (posture(), wrench()), |(q, w)| {
        let ne = static_joint_torques(&chain, &q, &seg, &w, STANDARD_GRAVITY).unwrap();
        let jt = torque_oracle_jacobian(&chain, &q, &seg, &w, STANDARD_GRAVITY).unwrap();
        for i in 0..ARM_JOINTS {
            ensure!((ne[i] - jt[i]).abs() < 1e-6, "joint {i}: {} vs {}", ne[i], jt[i]);
        }
        Ok(())
    })
}

fn axis_force(cases: u32) -> Result<(), String> {
    let (chain, seg) = arm();
    check(cases, (posture(), 0..ARM_JOINTS, -50.0..50.0f64, any::<bool>()), |(q, i, s, along_axis)| {
        let frames = chain.frames_unchecked(&q);
        let axis: Vector3<f64> = rotation(&frames[i]).column(2).into_owned();
        let lever = translation(&frames[ARM_JOINTS]) - translation(&frames[i]);
        let force = if along_axis { axis * s } else { lever * s };
        let tau = static_joint_torques(&chain, &q, &seg, &ExternalWrench::force(force), 0.0).unwrap();
        ensure!(tau[i].abs() < 1e-9, "joint {i} torque {}", tau[i]);
        Ok(())
    })
}

fn percentile_affine(cases: u32) -> Result<(), String> {
    check(cases, (10.0..150.0f64, 0.0..4.9f64), |(mean, sd)| {
        let v: Vec<f64> = Percentile::BANDS
            .iter()
            .map(|&z| percentile_strength(mean, sd, z).unwrap())
            .collect();
        for w in v.windows(2) {
            ensure!(close(w[1] - w[0], sd, 1e-12, 1e-12), "step {} vs sd {sd}", w[1] - w[0]);
            ensure!(sd == 0.0 || w[1] > w[0], "not increasing");
        }
        Ok(())
    })
}

fn endurance_in_percentile(cases: u32) -> Result<(), String> {
    let model = StrengthModel::shipped();
    check(cases, (posture(), 0..2usize, 0.5..30.0f64), |(q, j, load)| {
        let joint = FlexionJoint::ALL[j];
        let Ok(s) = jointfatigue::strength::joint_strength(&model, joint, &q) else {
            return Ok(());
        };
        let mut last = -1.0;
        for z in Percentile::BANDS {
            let p = CapacityParams::new(percentile_strength(s.mean, s.sd, z).unwrap()).unwrap();
            let t = endurance_time(&p, load).unwrap();
            ensure!(t > last || (t == 0.0 && last == 0.0), "endurance fell at {}", z.label());
            last = t;
        }
        Ok(())
    })
}

fn shoulder_cycle(load: f64, work: f64, rest: f64, n: usize) -> DutyCycle {
    DutyCycle {
        work_duration_s: work,
        rest_duration_s: rest,
        work_torque: BTreeMap::from([(FlexionJoint::Shoulder, load)]),
        n_cycles: n,
    }
}

fn zero_rest_merges(cases: u32) -> Result<(), String> {
    check(cases, (capacity(), 0.0..0.6f64, 1.0..60.0f64, 1..12usize), |(p, l, work, n)| {
        let load = l * p.gamma_max;
        let params = BTreeMap::from([(FlexionJoint::Shoulder, p)]);
        let report = simulate_duty_cycle(&params, &shoulder_cycle(load, work, 0.0, n)).unwrap();
        let total_min = work * n as f64 / 60.0;
        if load > 0.0 && endurance_time(&p, load).unwrap() < total_min {
            return Ok(());
        }
        let direct = decay_capacity(&p, p.gamma_max, load, total_min).unwrap();
        let last = report.records.last().unwrap().cap_after_rest;
        ensure!(close(last, direct, 1e-12, 0.0), "{last} vs {direct}");
        Ok(())
    })
}

fn rest_monotone(cases: u32) -> Result<(), String> {
    check(cases, (capacity(), 0.0..1.2f64, 1.0..60.0f64, 0.0..120.0f64, 0.0..60.0f64, 1..10usize), |(p, l, work, rest, extra, n)| {
        let load = l * p.gamma_max;
        let params = BTreeMap::from([(FlexionJoint::Shoulder, p)]);
        let short = simulate_duty_cycle(&params, &shoulder_cycle(load, work, rest, n)).unwrap();
        let long = simulate_duty_cycle(&params, &shoulder_cycle(load, work, rest + extra, n)).unwrap();
        for (s, l) in short.records.iter().zip(&long.records) {
            ensure!(l.cap_after_rest >= s.cap_after_rest * (1.0 - 1e-12), "cycle {}", s.cycle);
        }
        Ok(())
    })
}

fn units_monotone(cases: u32) -> Result<(), String> {
    check(cases, (capacity(), 0.0..1.2f64, 1.0..3.0f64, 1.0..120.0f64, any::<bool>()), |(p, l, s, unit, floor)| {
        let params = BTreeMap::from([(FlexionJoint::Shoulder, p)]);
        let rounding = if floor { Rounding::Floor } else { Rounding::Nearest };
        let count = |load: f64| {
            count_completable_units(&params, &BTreeMap::from([(FlexionJoint::Shoulder, load)]), unit, rounding).unwrap()
        };
        let load = l * p.gamma_max;
        let (a, b) = (count(load), count(load * s));
        ensure!(b <= a, "{b} > {a}");
        if load > 0.0 {
            ensure!(matches!(a, UnitCount::Finite(_)), "loaded joint unbounded");
        }
        Ok(())
    })
}

fn weight_scaling(cases: u32) -> Result<(), String> {
    let (chain, seg) = arm();
    let strength = StrengthModel::shipped();
    let discomfort = DiscomfortParams::default();
    let setup = SweepSetup {
        chain: &chain,
        segments: &seg,
        wrench: ExternalWrench::tool_load(2.5, Vector3::new(24.5, 0.0, 0.0), STANDARD_GRAVITY),
        gravity: STANDARD_GRAVITY,
        strength: &strength,
        discomfort: &discomfort,
    };
    let range = SweepRange {
        start: 0.40,
        stop: 0.50,
        step: 0.01,
    };
    let grid = evaluate_grid(&setup, &range).unwrap();
    let norms = normalizers(&grid);
    check(cases, (0.0..5.0f64, 0.0..5.0f64, 0.01..100.0f64), |(w1, w2, s)| {
        if w1 + w2 < 1e-3 {
            return Ok(());
        }
        let a = select_optimum(&setup, &grid, &ObjectiveWeights { w1, w2 }, &norms).unwrap().1;
        let b = select_optimum(&setup, &grid, &ObjectiveWeights { w1: w1 * s, w2: w2 * s }, &norms).unwrap().1;
        ensure!((a.distance - b.distance).abs() < 1e-6, "{} vs {}", a.distance, b.distance);
        Ok(())
    })
}

fn discomfort_sign(cases: u32) -> Result<(), String> {
    let params = DiscomfortParams {
        joints: (0..ARM_JOINTS)
            .map(|joint| JointDiscomfort {
                joint,
                lower_deg: -90.0,
                upper_deg: 90.0,
                neutral_deg: 0.0,
                weight: 1.0,
            })
            .collect(),
        g: 1e6,
    };
    let floor = discomfort_index(&PostureVector([0.0; ARM_JOINTS]), &params);
    check(cases, prop::array::uniform5(-90.0..90.0f64), |deg| {
        let value = discomfort_index(&PostureVector::from_degrees(deg), &params);
        ensure!(value >= 0.0, "negative discomfort {value}");
        let dev: f64 = deg.iter().map(|d| (d / 180.0).powi(2)).sum::<f64>() / 1e6;
        ensure!(value >= dev, "{value} below deviation term {dev}");
        ensure!(floor < 1e-21, "neutral discomfort {floor}");
        if dev > 1e-20 {
            ensure!(value > floor, "non-neutral posture as comfortable as neutral");
        }
        Ok(())
    })
}

fn penalty_bounds(cases: u32) -> Result<(), String> {
    let max = 1.5f64.powi(100);
    check(cases, (-200.0..0.0f64, 1.0..300.0f64, 0.0..1.0f64), |(lower, span, x)| {
        let upper = lower + span;
        let j = JointDiscomfort {
            joint: 0,
            lower_deg: lower,
            upper_deg: upper,
            neutral_deg: lower + span / 2.0,
            weight: 1.0,
        };
        let q = lower + x * span;
        for v in [upper_penalty(&j, q), lower_penalty(&j, q)] {
            ensure!(v > 0.0 && v <= max * (1.0 + 1e-12), "penalty {v} out of range");
        }
        ensure!(close(upper_penalty(&j, upper), max, 1e-12, 0.0), "QU at upper");
        ensure!(close(lower_penalty(&j, lower), max, 1e-12, 0.0), "QL at lower");
        ensure!(upper_penalty(&j, lower) < 1e-11 * max, "QU at lower");
        ensure!(lower_penalty(&j, upper) < 1e-11 * max, "QL at upper");
        Ok(())
    })
}

pub fn scenario() -> impl Strategy<Value = Scenario> {
    let posture = prop_oneof![
        posture().prop_map(|q| PostureSpec::JointAnglesDeg(q.degrees())),
        (0.25..0.56f64).prop_map(PostureSpec::DistanceM),
    ];
    let loads = prop::option::of((0.0..60.0f64, 0.0..30.0f64).prop_map(|(s, e)| {
        BTreeMap::from([(FlexionJoint::Shoulder, s), (FlexionJoint::Elbow, e)])
    }));
    let bands = prop::collection::btree_set(-2..=2i32, 1..=5)
        .prop_map(|set| set.into_iter().map(|z| Percentile::new(z).unwrap()).collect::<Vec<_>>());
    (
        (40.0..120.0f64, 1.5..2.0f64, posture, 0.0..10.0f64, 0.0..100.0f64, prop::array::uniform3(0.1..1.0f64)),
        (0.1..=1.0f64, loads, any::<bool>(), 1.0..60.0f64, prop::option::of((1.0..60.0f64, 0.0..120.0f64, 1..20usize))),
        (bands, 0.1..3.0f64, 0.5..4.0f64, 0.5..0.999f64, any::<bool>(), prop::option::of("[a-z0-9-]{1,12}")),
    )
        .prop_map(
            |((mass, height, posture, tool, force, dir), (split, loads, seg, unit, cycle), (bands, k, r, frac, literal, name))| {
                Scenario {
                    format: FORMAT_VERSION,
                    name,
                    body: BodyParams::new(mass, height).unwrap(),
                    posture,
                    tool_mass_kg: tool,
                    process_force: ProcessForce {
                        magnitude_n: force,
                        direction: dir,
                    },
                    load_split_factor: split,
                    joint_loads_nm: loads,
                    segment_weights: seg,
                    gravity: STANDARD_GRAVITY,
                    unit_duration_s: unit,
                    duty_cycle: cycle.map(|(work_s, rest_s, cycles)| DutyCycleSpec { work_s, rest_s, cycles }),
                    percentiles: bands,
                    weights: ObjectiveWeights::default(),
                    sweep: SweepRange::default(),
                    fatigue: FatigueSpec {
                        fatigue_rate_per_min: k,
                        recovery_rate_per_min: r,
                        recovery_fraction: frac,
                        index_form: if literal { IndexForm::EquationLiteral } else { IndexForm::Linear },
                    },
                    limits: None,
                    discomfort: None,
                    strength_grid: None,
                    base_dir: None,
                }
            },
        )
}

fn scenario_round_trip(cases: u32) -> Result<(), String> {
    check(cases, scenario(), |s| {
        let text = s.to_json_string();
        let parsed = Scenario::from_json_str(&text).map_err(|e| TestCaseError::fail(e.to_string()))?;
        ensure!(parsed == s, "round trip changed the scenario");
        ensure!(parsed.to_json_string() == text, "serialization not stable");
        Ok(())
    })
}

fn report_determinism(cases: u32) -> Result<(), String> {
    check(cases, scenario(), |s| {
        let a = endurance_report(&s, Rounding::Nearest);
        let b = endurance_report(&s, Rounding::Nearest);
        match (a, b) {
            (Ok(a), Ok(b)) => ensure!(a == b, "reports differ"),
            (Err(a), Err(b)) => ensure!(a == b, "errors differ"),
            _ => return Err(TestCaseError::fail("one run failed, the other did not")),
        }
        Ok(())
    })
}
