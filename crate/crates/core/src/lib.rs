//! Pseudo-spectral solvers for passive scalars, 2.5D/3D resistive MHD and
//! stochastically forced Navier–Stokes on periodic boxes, plus the
//! diagnostics used to measure enhanced dissipation and reconnection.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod advdiff;
pub mod error;
pub mod fit;
pub mod mhd3d;
pub mod spectral;
pub mod stochastic;
pub mod topology;

pub use error::{Error, Result};
pub use num_complex::Complex64;
