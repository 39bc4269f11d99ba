//! Constrained rendezvous and docking in a near rectilinear halo orbit.
//!
//! The crate models a Chief spacecraft on a southern L2 halo orbit of the
//! Earth-Moon system, perturbed by the Sun (bicircular four-body model), and
//! a Deputy spacecraft with a single body-fixed thruster. The Deputy tracks a
//! time-shifted copy of the Chief with an orbit-averaged LQR, points its
//! thruster with a geometric attitude controller, and a time shift governor
//! pulls the virtual target back onto the Chief while a forward prediction of
//! the closed loop certifies the line-of-sight, thrust and approach-velocity
//! constraints.
//!
//! All internal quantities are nondimensional (LU, TU); see
//! [`dynamics::SystemParams`] for the scales.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attitude;
pub mod config;
pub mod constraints;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod governor;
pub mod reference;
pub mod simkit;

pub use error::{Error, Result};
