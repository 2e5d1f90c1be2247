//! Cramer-Rao bounds for IRS-assisted sparse mmWave channel estimation and
//! a projected-gradient designer for the IRS reflection pattern.
//!
//! The cascaded channel seen through an `N`-element IRS is
//! `h = sum_l alpha_l u(psi_l)` with ULA response `u(psi)[n] = exp(i pi n psi)`.
//! Over `K` training symbols the receiver observes
//! `y = sqrt(rho) (alpha_0 1 + W^H h) + n`.
//!
//! * [`bayes_crb`]: Bayesian (random angle) bound, closed form and assembled.
//! * [`hybrid_crb`]: hybrid bound with deterministic angles.
//! * [`pgm`]: reflection pattern design minimising the angle bound.
//! * [`oracle`]: Monte Carlo Fisher information from per-sample scores.
//! * [`experiment`]: sweeps and table generation behind the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes_crb;
pub mod error;
pub mod experiment;
pub mod hybrid_crb;
pub mod model;
pub mod oracle;
pub mod patterns;
pub mod pgm;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Imaginary unit.
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub use error::{CrbError, Result};
pub use model::{ChannelRealization, Path, PriorSpec, SystemConfig};
pub use patterns::ReflectionPattern;
