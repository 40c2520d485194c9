//! Joint torques from recursive Newton-Euler inverse dynamics.
//!
//! Links 3 (upper arm) and 5 (forearm) carry the segment masses; the other
//! links are massless. Gravity enters as an upward acceleration of the base,
//! so the same recursion serves static holds and moving postures.

use nalgebra::{Matrix3, Vector3};

use crate::anthropometry::{ArmSegments, SegmentParams};
use crate::error::Result;
use crate::kinematics::{rotation, translation, FlexionJoint, KinematicChain, PostureVector, ARM_JOINTS};

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Force and moment applied to the hand by the environment, base frame,
/// acting at the hand frame origin.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExternalWrench {
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
}

impl ExternalWrench {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn force(force: Vector3<f64>) -> Self {
        Self {
            force,
            moment: Vector3::zeros(),
        }
    }

    /// Hand load from holding a tool of `tool_mass` kg while pushing it with
    /// `push` newtons. The hand feels the tool weight and the reaction to the
    /// push.
    pub fn tool_load(tool_mass: f64, push: Vector3<f64>, gravity: f64) -> Self {
        Self::force(Vector3::new(0.0, 0.0, -tool_mass * gravity) - push)
    }
}

impl std::ops::Add for ExternalWrench {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            force: self.force + rhs.force,
            moment: self.moment + rhs.moment,
        }
    }
}

/// Torque exerted by each joint actuator on its distal link about the
/// joint's Z axis, N·m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointTorques(pub [f64; ARM_JOINTS]);

impl JointTorques {
    /// Torques with only the two flexion joints loaded.
    pub fn from_flexion(shoulder: f64, elbow: f64) -> Self {
        let mut tau = [0.0; ARM_JOINTS];
        tau[FlexionJoint::Shoulder.index()] = -shoulder;
        tau[FlexionJoint::Elbow.index()] = -elbow;
        Self(tau)
    }

    /// Torque in the flexion direction (flexion is negative rotation about
    /// Z for both joints).
    pub fn flexion(&self, joint: FlexionJoint) -> f64 {
        -self.0[joint.index()]
    }

    /// Magnitude of the load carried by a flexion joint.
    pub fn load(&self, joint: FlexionJoint) -> f64 {
        self.flexion(joint).abs()
    }
}

impl std::ops::Index<usize> for JointTorques {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Mass properties of one link, expressed in the link frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkInertia {
    pub mass: f64,
    pub com: Vector3<f64>,
    /// Inertia about the centre of mass.
    pub inertia: Matrix3<f64>,
}

impl LinkInertia {
    pub fn massless() -> Self {
        Self {
            mass: 0.0,
            com: Vector3::zeros(),
            inertia: Matrix3::zeros(),
        }
    }
}

/// Mass properties of the five links of the arm chain.
pub fn arm_links(chain: &KinematicChain, segments: &ArmSegments) -> [LinkInertia; ARM_JOINTS] {
    let mut links = [LinkInertia::massless(); ARM_JOINTS];
    // Frame 3 sits at the elbow with the shoulder at +RL3 on its Z axis.
    let upper: &SegmentParams = &segments.upper_arm;
    links[2] = LinkInertia {
        mass: upper.mass,
        com: Vector3::new(0.0, 0.0, chain.upper_arm_length * (1.0 - upper.com_offset)),
        inertia: upper.inertia,
    };
    // Frame 5 sits at the elbow with the hand at -RL5 on its Z axis.
    let fore = &segments.forearm;
    links[4] = LinkInertia {
        mass: fore.mass,
        com: Vector3::new(0.0, 0.0, -chain.forearm_length * fore.com_offset),
        inertia: fore.inertia,
    };
    links
}

/// Joint velocities and accelerations for the dynamic case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointMotion {
    pub velocity: [f64; ARM_JOINTS],
    pub acceleration: [f64; ARM_JOINTS],
}

impl JointMotion {
    pub fn at_rest() -> Self {
        Self {
            velocity: [0.0; ARM_JOINTS],
            acceleration: [0.0; ARM_JOINTS],
        }
    }
}

/// Recursive Newton-Euler over the chain.
pub fn inverse_dynamics(
    chain: &KinematicChain,
    q: &PostureVector,
    motion: &JointMotion,
    links: &[LinkInertia; ARM_JOINTS],
    wrench: &ExternalWrench,
    gravity: f64,
) -> Result<JointTorques> {
    let frames = crate::kinematics::forward_kinematics(chain, q)?;
    Ok(newton_euler(&frames, motion, links, wrench, gravity))
}

fn newton_euler(
    frames: &[nalgebra::Matrix4<f64>],
    motion: &JointMotion,
    links: &[LinkInertia; ARM_JOINTS],
    wrench: &ExternalWrench,
    gravity: f64,
) -> JointTorques {
    let origins: Vec<Vector3<f64>> = frames.iter().map(translation).collect();
    let rotations: Vec<Matrix3<f64>> = frames.iter().map(rotation).collect();
    let axes: Vec<Vector3<f64>> = rotations.iter().map(|r| r.column(2).into_owned()).collect();

    // Outward pass: angular velocity/acceleration and origin acceleration.
    let mut omega = Vector3::zeros();
    let mut omega_dot = Vector3::zeros();
    let mut accel = Vector3::new(0.0, 0.0, gravity);
    let mut prev_origin = Vector3::zeros();
    let mut inertial_force = [Vector3::zeros(); ARM_JOINTS];
    let mut inertial_moment = [Vector3::zeros(); ARM_JOINTS];
    let mut com_world = [Vector3::zeros(); ARM_JOINTS];
    for i in 0..ARM_JOINTS {
        let lever = origins[i] - prev_origin;
        accel += omega_dot.cross(&lever) + omega.cross(&omega.cross(&lever));
        let spin = axes[i] * motion.velocity[i];
        omega_dot += axes[i] * motion.acceleration[i] + omega.cross(&spin);
        omega += spin;
        prev_origin = origins[i];

        let link = &links[i];
        let c = rotations[i] * link.com;
        com_world[i] = origins[i] + c;
        let accel_com = accel + omega_dot.cross(&c) + omega.cross(&omega.cross(&c));
        inertial_force[i] = accel_com * link.mass;
        let inertia = rotations[i] * link.inertia * rotations[i].transpose();
        inertial_moment[i] = inertia * omega_dot + omega.cross(&(inertia * omega));
    }

    // Inward pass: what the distal side pulls on each link.
    let hand = origins[ARM_JOINTS];
    let mut next_point = hand;
    let mut force = -wrench.force;
    let mut moment = -wrench.moment;
    let mut tau = [0.0; ARM_JOINTS];
    for i in (0..ARM_JOINTS).rev() {
        let p = origins[i];
        let n = inertial_moment[i]
            + moment
            + (com_world[i] - p).cross(&inertial_force[i])
            + (next_point - p).cross(&force);
        let f = inertial_force[i] + force;
        tau[i] = n.dot(&axes[i]);
        force = f;
        moment = n;
        next_point = p;
    }
    JointTorques(tau)
}

/// Static joint torques: zero joint velocity and acceleration.
pub fn static_joint_torques(
    chain: &KinematicChain,
    q: &PostureVector,
    segments: &ArmSegments,
    wrench: &ExternalWrench,
    gravity: f64,
) -> Result<JointTorques> {
    inverse_dynamics(
        chain,
        q,
        &JointMotion::at_rest(),
        &arm_links(chain, segments),
        wrench,
        gravity,
    )
}

pub mod oracle {
    //! Jacobian-transpose evaluation of the same static torques, used to
    //! cross-check the recursion.

    use super::*;

    const STEP: f64 = 1e-6;

    /// `τ = -Σ J_c(i)ᵀ m_i g  -  J_handᵀ w`, with position Jacobians taken
    /// by central differences.
    pub fn torque_oracle_jacobian(
        chain: &KinematicChain,
        q: &PostureVector,
        segments: &ArmSegments,
        wrench: &ExternalWrench,
        gravity: f64,
    ) -> Result<JointTorques> {
        chain.check_limits(q)?;
        let links = arm_links(chain, segments);
        let weight = Vector3::new(0.0, 0.0, -gravity);

        let points = |q: &PostureVector| -> Vec<Vector3<f64>> {
            let frames = chain.frames_unchecked(q);
            let mut pts: Vec<Vector3<f64>> = links
                .iter()
                .enumerate()
                .map(|(i, l)| translation(&frames[i]) + rotation(&frames[i]) * l.com)
                .collect();
            pts.push(translation(&frames[ARM_JOINTS]));
            pts
        };
        let axes: Vec<Vector3<f64>> = chain
            .frames_unchecked(q)
            .iter()
            .take(ARM_JOINTS)
            .map(|f| rotation(f).column(2).into_owned())
            .collect();

        let mut tau = [0.0; ARM_JOINTS];
        for j in 0..ARM_JOINTS {
            let mut plus = *q;
            let mut minus = *q;
            plus.0[j] += STEP;
            minus.0[j] -= STEP;
            let (pp, pm) = (points(&plus), points(&minus));
            let mut t = 0.0;
            for (i, link) in links.iter().enumerate() {
                let dc = (pp[i] - pm[i]) / (2.0 * STEP);
                t -= dc.dot(&(weight * link.mass));
            }
            let dh = (pp[ARM_JOINTS] - pm[ARM_JOINTS]) / (2.0 * STEP);
            t -= dh.dot(&wrench.force) + axes[j].dot(&wrench.moment);
            tau[j] = t;
        }
        Ok(JointTorques(tau))
    }
}
