//! Henstock–Kurzweil Δ-integration of lattice-valued functions on time scales.

// Radius and tolerance checks are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod convergence;
pub mod expr;
pub mod gauge;
pub mod integrator;
pub mod partition;
pub mod riesz;
pub mod timescale;
pub mod verify;
