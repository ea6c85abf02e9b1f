//! Planar balance model of a trotting quadruped with a laterally flexing
//! spine.
//!
//! During an ideal trot the robot stands on one diagonal leg pair at a time,
//! and the line through the two stance feet is its only base of support. A
//! rigid-bodied trotter keeps its center of mass well to one side of that
//! line for most of the cycle and rocks from side to side as the diagonals
//! alternate. Bending the spine sideways moves the hind foothold, which
//! rotates the support line; with the right flexion the line can be driven
//! through the center of mass.
//!
//! This crate provides the pieces of that story as composable modules:
//!
//! - [`kinematics`]: foothold positions as a function of stride and spinal
//!   flexion, with a circular-arc spine model.
//! - [`gait`]: the trot stride generator and stance schedule.
//! - [`balance`]: the diagonal support line and the signed distance from the
//!   center of mass to it.
//! - [`solver`]: a bisection solver for the flexion angle that zeroes that
//!   distance at mid-stance.
//! - [`spine`]: open-loop spine controllers, including a time-warped
//!   oscillator that reaches the balancing flexion exactly at mid-stance.
//! - [`tilt`]: a second-order roll proxy and an instantaneous pitch proxy
//!   driven by the support-line geometry, plus per-half-stride metrics.
//! - [`trace`]: CSV + JSON-sidecar persistence for simulation traces.
//! - [`experiment`]: the frequency-sweep experiment runner and summaries.
//! - [`config`]: the JSON run configuration shared by the CLI and tests.
//!
//! The crate is deterministic end to end: all randomness flows from a single
//! seed through per-cell counter-based RNG streams, and traces are written
//! with round-trip-exact float formatting.

pub mod balance;
pub mod config;
pub mod experiment;
pub mod gait;
pub mod kinematics;
pub mod solver;
pub mod spine;
pub mod tilt;
pub mod trace;
