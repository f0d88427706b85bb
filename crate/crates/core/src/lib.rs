//! Finite-element solvers for two-dimensional high-contrast conductivity
//! problems and their asymptotic-expansion multiscale approximation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod expansion;
pub mod experiment;
pub mod fem;
pub mod geometry;
pub mod linalg;
pub mod localization;
pub mod mesh;
pub mod vtk;
