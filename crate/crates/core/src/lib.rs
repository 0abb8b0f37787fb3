//! Perception-aware time-optimal path parameterization for quadrotors.
//!
//! Given a geometric path with a heading schedule, landmarks that must stay in
//! the camera's conical field of view, attitude cones and actuation limits,
//! [`profilesolver::solve`] computes the fastest square-speed profile `h(s)` in
//! two backward-forward sweeps: a point-mass pass under a total-thrust bound,
//! then a rotor pass with per-motor bounds on a smoothed attitude schedule.
//! [`trajout`] turns the profile into a timed, sampled trajectory and checks it
//! against the raw geometry.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod attsmooth;
pub mod error;
pub mod fovcone;
pub mod math;
pub mod oracle;
pub mod pathspec;
pub mod profilesolver;
pub mod quadmodel;
pub mod trajout;

pub use error::{Direction, Error, Result, Stage};
pub use math::{Mat3, Vec3};
