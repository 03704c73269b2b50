//! Numerical laboratory for a one-dimensional atom-molecular condensate with
//! photoassociation coupling.
//!
//! The mean fields obey a pair of coupled nonlinear Schrödinger equations in
//! natural units (ħ = m = 1, molecular mass 2):
//!
//! ```text
//! i ∂t ψa = -1/2 ψa'' + (Va + ga|ψa|² + gam|ψm|²) ψa + √2 α ψm ψa*
//! i ∂t ψm = -1/4 ψm'' + (Vm + ε + gm|ψm|² + gam|ψa|²) ψm + (α/√2) ψa²
//! ```
//!
//! The crate provides:
//!
//! * [`grid`] — periodic (spectral) and bounded (finite-difference) 1-D grids
//!   with differentiation and quadrature;
//! * [`model`] — residuals, conserved quantities, the energy functional and
//!   the Madelung/continuity machinery for the equations above;
//! * [`catalog`] — closed-form constructors for the six exact stationary
//!   families (droplet, power-law pulse, hyperbolic; ground/excited pairs)
//!   and their superposed/reparametrized forms;
//! * [`solver`] — collocation + Levenberg-Marquardt reconstruction of the
//!   consistency conditions each family must satisfy, with branch
//!   continuation;
//! * [`propagate`] — Strang split-step and finite-difference RK4 real-time
//!   propagators plus normalized imaginary-time relaxation;
//! * [`diagnostics`] — overlaps, two-mode (qubit) projections, phase-slope
//!   chemical-potential recovery, flat-top and tail metrics.

pub mod catalog;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod model;
pub mod presets;
pub mod propagate;
pub mod solver;

pub use catalog::{AnsatzParams, DropletScaling, FamilyId};
pub use error::{Error, Result};
pub use field::FieldPair;
pub use grid::{Grid, GridKind};
pub use model::{ChemicalPotential, Couplings, Potential};

/// Complex double, the scalar type for all wavefunctions.
pub type C64 = num_complex::Complex64;
