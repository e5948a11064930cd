//! Numerical toolkit for C^{2,α} regularity of almost-linear elliptic
//! equations `F(D²u) = f` in the plane.
//!
//! The crate evaluates the explicit constants of the regularity argument,
//! solves Dirichlet problems on uniform grids, runs the mollify /
//! harmonic-replace / polynomial-iterate pipeline on the solutions, measures
//! Campanato decay and Hölder seminorms, and audits Cordes-type conditions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod wide;
pub mod rng;
pub mod matrix;
pub mod constants;
pub mod quadrature;
pub mod mollifier;
pub mod grid;
pub mod fields;
pub mod operators;
pub mod solver;
pub mod campanato;
pub mod cordes;
pub mod acceptance;

pub use matrix::{Matrix2, SymmetricMatrix2};
pub use wide::Wide;
