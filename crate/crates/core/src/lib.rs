//! Multivariate orthogonal polynomials from moment sequences: recurrences,
//! truncated Jacobi matrices, Gaussian cubature from joint eigenvalues, and
//! Prony-style reconstruction of moment convergents.

pub mod cubature;
pub mod error;
pub mod families;
#[doc(hidden)]
pub mod harness;
pub mod index;
pub mod jacobi;
pub mod json;
mod linalg;
pub mod momentrec;
pub mod moments;
pub mod orthopoly;
pub mod quad1d;
pub mod weight;

pub use error::{Error, Result};
pub use index::{graded_monomials, multi_power, shift_matrix, GradedBasis, MultiIndex};
pub use moments::{MomentProvider, MomentTable};
pub use weight::{BaseWeight, SymSign, WeightDescriptor};

use serde::{Deserialize, Serialize};

/// Relative tolerances used across the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Singular-value floor for definiteness and Schur eigenvalues.
    pub def: f64,
    /// Orthogonality residual.
    pub orth: f64,
    /// Agreement of direct and recursive evaluation.
    pub eval: f64,
    /// Commutativity of truncated Jacobi matrices.
    pub comm: f64,
    /// Joint eigenpair residual.
    pub eig: f64,
    /// Conjugate pairing distance.
    pub pair: f64,
    /// Cubature exactness.
    pub cub: f64,
    /// Exponential-fit residual.
    pub fit: f64,
    /// Kernel floor for simplicity verdicts.
    pub kernel: f64,
    /// Hankel-Schur deviation relative to the matrix scale.
    pub hankel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            def: 1e-10,
            orth: 1e-9,
            eval: 1e-9,
            comm: 1e-8,
            eig: 1e-7,
            pair: 1e-8,
            cub: 1e-9,
            fit: 1e-10,
            kernel: 1e-10,
            hankel: 1e-9,
        }
    }
}

/// Seed of the random combination used by the joint eigensolver.
pub const DEFAULT_SEED: u64 = 0x5EED;
