//! Discrete-time quantum walks on joined half lines and homogeneous trees.
//!
//! The crate is organised bottom-up:
//!
//! * [`coin`] builds coins and the scalar parameters every formula uses.
//! * [`walker`] evolves the walk directly on the joined half lines and on trees.
//! * [`reduced`] evolves the four-component half-line reduction and projects it
//!   back onto a single branch.
//! * [`series`] and [`genfun`] expand the generating functions of the reduced
//!   walk, either as truncated power series or pointwise, and extract the
//!   long-time amplitudes from their poles.
//! * [`theory`] evaluates the closed-form localization and weak-limit results.
//! * [`report`] holds the comparison records shared by the oracles.

// Validation uses `!(v < tol)` so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod coin;
pub mod genfun;
pub mod reduced;
pub mod report;
pub mod series;
pub mod theory;
pub mod walker;

pub use num_complex::Complex64 as C64;
