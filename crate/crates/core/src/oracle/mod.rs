//! Exact finite-N dynamics and counting statistics on the occupation-number
//! basis of a one-dimensional grid.

mod basis;
mod hamiltonian;
mod krylov;
mod statistics;

pub use basis::{build_basis, product_state, sector_dimension, FockBasis, ManyBodyState, BASIS_CAP};
pub use hamiltonian::{apply_one_body, build_hamiltonian, SecondQuantizedHamiltonian};
pub use krylov::{evolve_exact, evolve_exact_with, KrylovOptions, KrylovReport};
pub use statistics::{
    condensate_fraction, empirical_lmgf, observable_moments, observable_statistics, reduced_density,
    second_quantize, tail_probability, STATISTICS_CAP,
};
