//! CRB-oriented transmit beamforming for sensing an extended target in a
//! joint sensing and communication system.
//!
//! The target is described by one of three models:
//!
//! - **PSM** (parametric scattering): central angle, angular spread and
//!   per-scatterer gains, with scatterers uniformly spaced across the spread.
//! - **DSM** (discrete scattering): free per-scatterer angles and gains.
//! - **UCM** (unstructured): every entry of the response matrix is unknown.
//!
//! For each model the crate assembles the Fisher information, builds the
//! semidefinite relaxation of the CRB-minimizing beamforming problem under
//! per-user SINR and total power constraints, solves it with an interior
//! point conic solver, and recovers rank-one communication beams plus the
//! sensing beamformer. CRBs of designs obtained under DSM and UCM are mapped
//! into PSM coordinates through Jacobians so all three can be compared on
//! the same parameters.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

// System OpenBLAS backs the dense kernels of the PSD cones in the solver.
use openblas_src as _;

pub mod array;
pub mod backend;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod fisher;
pub mod linalg;
pub mod sdp;
pub mod target;

pub use array::ArrayConfig;
pub use error::{Error, Result};
pub use fisher::{CrbReport, FimMatrix, FimPartition, NoiseAndDwell};
pub use target::{DsmParams, ModelKind, TargetParams};
