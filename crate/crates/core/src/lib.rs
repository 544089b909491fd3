//! Reconstruction of space-dependent sources in 1D type-III thermoelasticity
//! with memory, from final-time or time-averaged observations.
//!
//! The pipeline: [`forward`] and [`adjoint`] solve the coupled PDE system,
//! [`measurement`] turns solutions into observations, [`gradient`] builds
//! cost gradients, and [`reconstruction`] runs Landweber, steepest descent
//! and conjugate gradients. [`experiment`] wires up the manufactured
//! benchmark and parameter sweeps.

// NaN must fail validation, so `!(x > 0.0)` is intended
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod adjoint;
pub mod error;
pub mod experiment;
pub mod fem;
pub mod forward;
pub mod gradient;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod measurement;
pub mod operator;
pub mod reconstruction;
pub mod source;

pub use error::{Error, Result};
pub use grid::{Field, SpaceGrid, TimeGrid, Trajectory};
pub use measurement::MeasurementKind;
