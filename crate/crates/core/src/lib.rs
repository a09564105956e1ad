//! Energy eigenvalues of `−ψ″ + V(x)ψ = Eψ` for rational anharmonic
//! potentials `V(x) = ω x^{2m} + p(x)/q(x)` by double-exponential Sinc
//! collocation.
//!
//! The pipeline is: pick a conformal map for the potential ([`confmap`]),
//! assemble the symmetric collocation system for a half-width `N`
//! ([`discretize`]), solve the generalized eigenproblem ([`eigensolve`]) and
//! refine `N` until successive eigenvalue estimates agree ([`convergence`]).

// `!(x > 0.0)` guards are deliberate since they also reject NaN; index
// loops mirror the textbook form of the matrix algorithms.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

pub mod cli;
pub mod confmap;
pub mod convergence;
pub mod discretize;
pub mod eigensolve;
pub mod error;
mod linalg;
pub mod polynomial;
pub mod potential;
pub mod sinc;

pub use confmap::{ConformalMap, MapKind};
pub use convergence::{converge, ConvergeOptions, MapStrategy};
pub use discretize::{build_system, GeneralizedEigenSystem};
pub use eigensolve::Spectrum;
pub use error::{Error, Result};
pub use polynomial::Polynomial;
pub use potential::RationalPotential;
