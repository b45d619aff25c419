//! Dense tensor decomposition toolkit for multichannel signal classification.
//!
//! The crate provides:
//!
//! - [`tensor`]: dense N-way arrays, Kruskal (CP) models and the multilinear
//!   primitives they need (mode-n unfolding, Kronecker and Khatri-Rao
//!   products, reconstruction).
//! - [`linalg`]: the small dense decompositions used throughout (Jacobi SVD,
//!   pseudo-inverse, symmetric and generalized eigensolvers, Cholesky).
//! - [`solver`]: alternating nonlinear least squares for CP models. Each mode
//!   update is a Gauss-Newton step inside a trust region; nonnegativity is
//!   enforced through the square-mapping parameterization.
//! - [`supervised`]: supervised CPD. Trials are folded into a class-indexed
//!   tensor, the class-mode factor is pinned to the identity during fitting,
//!   and classification is a pseudo-inverse projection of the vectorized
//!   trial onto per-class scores.
//! - [`signal`]: short-time Fourier power tensors, band selection and the
//!   energy-ratio SNR measure.
//! - [`synth`]: the synthetic two-class benchmark (gamma-pdf mode-1 course,
//!   three-component mode-2 course, Gaussian noise at a target SNR).
//! - [`baselines`]: unsupervised CPD feature extraction, common spatial
//!   patterns, and a ridge-regularized linear discriminant.
//!
//! The crate is `no_std` (with `alloc`); all floating-point transcendentals
//! go through `libm` so results are bit-identical across targets. Everything
//! is deterministic given a seed, and all public types are immutable after
//! construction, so models can be shared freely across threads.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod math;

pub mod linalg;
pub mod rng;
pub mod solver;
pub mod supervised;
pub mod tensor;

pub use linalg::pseudo_inverse;
pub use solver::{fit_cpd, FitReport, SolverOptions};
pub use supervised::{classify, train, LabeledTrialSet, Prediction, SupervisedModel};
pub use tensor::{DenseTensor, KruskalModel, Matrix};
