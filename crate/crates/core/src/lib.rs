//! Spectral simulation and virial analysis for the focusing nonlinear
//! Schrödinger equation `i u_t + Δu + |u|^{p-1} u = 0`.

pub mod error;
pub mod field;
pub mod criteria;
pub mod cutoffs;
pub mod grid;
pub mod groundstate;
pub mod initial;
pub mod integrator;
pub mod observables;
pub mod virial;

pub use error::{NlsError, Result};
pub use field::Field;
pub use grid::{Geometry, Grid, GridSpec, WavenumberSet};
pub use observables::{criticality, ConservedSet, Criticality, EquationParams};
