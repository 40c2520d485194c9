//! Compiles the code blocks of the guide in `book/src` as doctests, one
//! module per chapter so a failure points at its chapter.

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/fatigue.md")]
pub mod fatigue {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/arm.md")]
pub mod arm {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/torques.md")]
pub mod torques {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/strength.md")]
pub mod strength {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/schedules.md")]
pub mod schedules {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/posture.md")]
pub mod posture {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/scenarios.md")]
pub mod scenarios {}
