//! Random inner functions whose Clark measure is Gaussian multiplicative chaos.
//!
//! The pipeline runs from a log-correlated Gaussian field ([`field`]) through
//! its exponentiated chaos measure ([`chaos`]) to the inner function
//! `φ = (h - 1)/(h + 1)` built from the Herglotz transform `h` of that
//! measure ([`clark`]). [`zeros`] locates the zeros of `φ`, [`decomp`]
//! constructs the rank-two splitting of a perturbed covariance, and
//! [`experiments`] estimates the scaling exponents by Monte Carlo.

// Checks such as `!(x > 0.0)` are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chaos;
pub mod clark;
pub mod decomp;
pub mod error;
pub mod experiments;
pub mod field;
pub mod linalg;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod trig;
pub mod zeros;

pub use chaos::{build_measure, mass_moment_mc, ChaosMeasure, ChaosMode};
pub use clark::{Atom, DiscFunction, DiscPoint, InnerFunctionEval};
pub use error::{Error, Result};
pub use field::{
    covariance_canonical, sample_canonical, sample_exact_scaling, sample_perturbed, split_mode, Domain, FieldSample,
    GridSpec, KernelSpec, Mode, Truncation,
};
pub use num_complex::Complex64;
pub use stats::{fit_slope, Estimate, SlopeFit};
pub use trig::{TrigKernel, TrigPoly};
pub use zeros::{beta_sum, count_zeros, locate_zeros, make_blaschke, Zero, ZeroSet};
