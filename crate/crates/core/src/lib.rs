//! Spontaneous PT-symmetry breaking in non-hermitian random-matrix ensembles.
//!
//! Two Gaussian random Hamiltonians, one absorbing at rate `μ` and one
//! amplifying at the same rate, are coupled through a tunnel barrier with `N`
//! channels of transmission `T`. This crate samples the ensembles, assembles
//! the effective Hamiltonians, measures the fraction of complex energy levels
//! and traces how real levels coalesce into conjugate pairs.

pub mod cli;
pub mod ensembles;
pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod rng;
pub mod perturbation;
pub mod spectral;

pub use error::{Error, Result};

/// Runs faer's dense kernels on the calling thread. The drivers parallelize
/// across realizations; letting faer also split each kernel over the rayon
/// pool would make the rounding, and so the outputs, depend on the pool size.
pub fn sequential_kernels() {
    faer::set_global_parallelism(faer::Par::Seq);
}
