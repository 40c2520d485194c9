//! Joint-level fatigue of manual handling tasks: arm kinematics and inverse
//! dynamics, a fatigue and recovery model for joint strength, work/rest
//! scheduling and a stress/discomfort posture search.

pub mod anthropometry;
pub mod dynamics;
pub mod error;
pub mod fatigue;
pub mod kinematics;
pub mod posture;
pub mod report;
pub mod reproduce;
pub mod scenario;
pub mod schedule;
pub mod strength;

pub use error::{Error, Result};
