//! Proximal gradient descent and its α-relaxed variant for composite
//! objectives `λ f + φ` where `f` is smooth and `φ` is weakly convex.
//!
//! The crate is `no_std` (it needs `alloc`). Everything touching the file
//! system, the clock or the command line lives in the `wcprox` companion
//! crate.
//!
//! Layout:
//!
//! * [`tensor`], [`kernel`], [`operator`]: dense planes, circular
//!   convolution, sampling operators and power iteration.
//! * [`fidelity`], [`degrade`], [`metrics`], [`problem`]: inverse problems
//!   assembled from the above.
//! * [`denoiser`], [`prox_oracle`]: gradient-step denoisers `Id − γ∇g` and
//!   the potential `φ̂` whose proximal map they are.
//! * [`bounds`], [`solver`]: step-size and regularization limits, and the
//!   PGD / αPGD iterations (plain and plug-and-play).
//! * [`properties`]: sampled checks of the inequalities the convergence
//!   results rest on.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod degrade;
pub mod denoiser;
pub mod error;
pub mod fidelity;
pub mod kernel;
pub mod math;
pub mod metrics;
pub mod operator;
pub mod problem;
pub mod properties;
pub mod prox_oracle;
pub mod rng;
pub mod scenarios;
pub mod solver;
pub mod synthetic;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{ImageTensor, Shape};
