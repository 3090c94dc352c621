//! Green functions of parabolic operators with time-discontinuous
//! coefficients in wedges: exact whole-space kernels, finite-difference
//! Dirichlet and oblique-derivative Green functions in planar sectors,
//! critical exponents, weighted norms and bound-envelope validators.

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod coefficients;
pub mod error;
pub mod exponents;
pub mod geometry;
pub mod kv;
pub mod linalg;
pub mod norms;
pub mod oblique;
pub mod quadrature;
pub mod samples;
pub mod solver;
pub mod wholespace;

pub use coefficients::CoefficientPath;
pub use error::{Error, Result};
pub use geometry::{ConeProfile, ConeSpec, Geometry, WedgeDomain};
pub use kv::KeyValues;
pub use linalg::Matrix;
pub use samples::{KernelSample, SampleKind};
pub use wholespace::{gamma, gamma_deriv, verify_gaussian_bound, CloudPoint, GaussianFit, WholeSpaceKernel};
