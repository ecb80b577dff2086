//! Stability analysis of the ablative Rayleigh-Taylor instability for the
//! Kull-Anisimov density profile.
//!
//! The base state is the smooth density profile `rho0(x) = rho_a * xi(x/L0)`
//! with `xi' = xi^(nu+1) (1 - xi)`. A normal-mode perturbation at transverse
//! wavenumber `k` grows like `exp(gamma t)`, where `gamma` solves the Rayleigh
//! eigenproblem. This crate computes `gamma(k)` three independent ways:
//!
//! * [`evans`] builds the Evans function `Ev(lambda, eps)` from the two
//!   decaying solution branches ([`overdense`], [`lowdense`]) and root-finds
//!   its zero; valid for small `eps = k L0`.
//! * [`spectral`] solves the equivalent self-adjoint Schroedinger-form
//!   eigenproblem on a grid; valid for moderate to large `k`.
//! * [`linevolve`] evolves the linearized equations in time and measures the
//!   growth rate directly.
//!
//! The asymptotic expansion `lambda(eps) = 1 + 2(2 eps/nu)^(1/nu)/Gamma(1+1/nu) + ...`
//! and its second-order coefficient are verified against the computed roots in
//! the acceptance suite.

// `!(x > 0.0)` rejects NaN where `x <= 0.0` would accept it; tabulated
// reference constants keep all digits of their source.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision)]

pub mod error;
pub mod evans;
pub mod linevolve;
pub mod lowdense;
pub mod num;
pub mod overdense;
pub mod profile;
pub mod specfun;
pub mod spectral;

pub use error::Error;
pub use evans::{dispersion, find_lambda, DispersionRow, EvansEval};
pub use lowdense::{GSolution, MinusBranch, TGrid};
pub use overdense::{ModeContext, PlusBranch};
pub use profile::{PhysicalParams, Profile, ProfileEval};
pub use spectral::{SpectralResult, XGrid};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
