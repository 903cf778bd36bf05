//! Nematic liquid-crystal flow: a Beris–Edwards Navier–Stokes / Q-tensor
//! model with anisotropic Landau–de Gennes elasticity on structured grids.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod elliptic;
pub mod config;
pub mod error;
pub mod fields;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod krylov;
pub mod ldg;
pub mod manufactured;
mod par;
pub mod rng;
pub mod scenario;
pub mod simulate;
pub mod stepper;
pub mod stokes;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{BoundaryData, Field, FieldValue, GridSpec, Vec3};
pub use ldg::MaterialParams;
pub use par::init_threads;
pub use tensor::{Mat3, QTensor, Rank3Gradient, Rank4Viscosity};
