//! Mean-field dynamics of weakly interacting bosons on periodic grids,
//! Bogoliubov fluctuations around the condensate, and large-deviation
//! predictions for one-particle observables, validated against exact
//! finite-`N` many-body dynamics.

// Negated comparisons below are NaN guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod fluctuation;
pub mod grid;
pub mod hartree;
pub mod ldp;
pub mod linalg;
pub mod observable;
pub mod oracle;
pub mod potential;

pub use error::{Error, Result};
pub use grid::{ComplexField, GridSpec};
pub use observable::Observable;
pub use potential::{Potential, PotentialKind};
