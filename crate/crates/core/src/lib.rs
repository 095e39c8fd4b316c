//! Self-consistent one-dimensional Kohn-Sham / Schroedinger-Poisson solver
//! for planar semiconductor nanostructures, at zero and finite temperature.
//!
//! Positions live on `[0, 1]`, energies are scaled so that `hbar^2 / 2 = 1`.
//! The pipeline is: [`grid`] (mesh, layer stacks, norms) feeding
//! [`operators`] (finite-element Schroedinger and Poisson operators),
//! [`eigensolver`] and [`statistics`] (occupations and the density
//! operator), combined by [`scf`] into the self-consistent solution.
//! [`analysis`] numerically checks the analytic properties of the model.

// NaN must fail the positivity checks, so negated comparisons are intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod eigensolver;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod operators;
pub mod scf;
pub mod statistics;
pub mod xc;

pub use error::{Error, Result};
