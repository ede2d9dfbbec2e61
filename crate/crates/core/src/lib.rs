//! Quasi-Monte Carlo integration over products of `d`-dimensional simplices.
//!
//! The crate builds an exactly orthonormal polynomial basis on `T^d`,
//! evaluates the weighted reproducing kernels of the Sobolev spaces built on
//! it, and computes worst-case errors of equal-weight rules on `(T^d)^m`
//! together with the upper and lower bounds that decide tractability.
//!
//! Module map:
//!
//! - [`simplex`], [`poly`]: geometry, sampling and exact polynomial algebra.
//! - [`orthopoly`]: the orthonormal basis, degree kernels and the operator
//!   whose eigenfunctions the basis elements are.
//! - [`kernel`]: reproducing kernels and their series constants.
//! - [`wce`]: worst-case errors and bounds.
//! - [`tract`]: weight families and tractability verdicts.
//! - [`search`]: empirical low-error point sets.
//! - [`io`]: point-set files and CSV tables; [`verify`]: the invariant suite.

pub mod error;
pub mod io;
pub mod kernel;
pub mod orthopoly;
pub mod poly;
pub mod quadrature;
pub mod search;
pub mod simplex;
pub mod tract;
pub mod verify;
pub mod wce;

pub use error::{Error, Result};
pub use kernel::{Kernel, KernelConstants, KernelParams, TruncationPolicy, WeightSchedule};
pub use orthopoly::OrthonormalBasis;
pub use poly::{poly_inner_product, MultiIndex, MultiIndexPolynomial};
pub use simplex::{monomial_integral, uniform_sample, ProductPoint, SimplexPoint};
pub use wce::{ErrorReport, ProductPointSet, TensorFourierFunction};
