//! Saturated feedback design for unstable 1D reaction-diffusion equations.
//!
//! The crate is organised along the pipeline:
//!
//! * [`spectral`] builds the Dirichlet eigen-decomposition of `∂xx + c(x)` and the
//!   truncated modal control system.
//! * [`saturation`] holds the saturation maps, the deadzone and the generalized
//!   sector condition.
//! * [`design`] checks stabilizability and places the closed-loop poles.
//! * [`lmi`] is the dense symmetric linear algebra plus the matrix-inequality
//!   feasibility engine.
//! * [`roa`] assembles ellipsoidal region-of-attraction certificates.
//! * [`sim`] integrates the saturated closed loop at modal, Galerkin and
//!   pointwise-saturated fidelity and sweeps grids of initial conditions.

// `!(x > 0.0)` is used deliberately so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod design;
pub mod error;
pub mod grid;
pub mod io;
pub mod lmi;
pub mod roa;
pub mod saturation;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
