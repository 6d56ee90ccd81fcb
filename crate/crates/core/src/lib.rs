//! Geometric phases of adiabatically controlled quantum systems whose
//! control is disturbed by classical noise.
//!
//! The crate follows eigenvalue branches of parameter-dependent Hamiltonians,
//! builds their gauge potentials and holonomies, drives a noise coordinate
//! with a stochastic differential equation, and splits the connection of the
//! disturbed system into control, noise and cross terms. Monte Carlo
//! ensembles and a direct Schrödinger integrator serve as independent checks.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod commands;
pub mod composite;
pub mod config;
pub mod connection;
pub mod error;
pub mod linalg;
pub mod manifold;
pub mod models;
pub mod output;
pub mod spectral;
pub mod stochastic;
pub mod verify;

pub use error::{Error, Result};

#[cfg(test)]
pub(crate) mod testutil {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use crate::linalg::{self, CMatrix, C64};

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMatrix {
        let m = CMatrix::from_fn(n, n, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        });
        linalg::hermitian_part(&m) * C64::new(scale, 0.0)
    }

    pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        linalg::exp_hermitian(&random_hermitian(rng, n, 2.0), 1.0)
    }
}
