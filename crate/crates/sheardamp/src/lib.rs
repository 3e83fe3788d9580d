//! Spectral representation of the linearized 2D Euler equations around a
//! monotone shear flow u(y) in the channel T x [0,1].
//!
//! For each streamwise mode α the vorticity obeys
//!
//! ```text
//! ∂_t ω̂ + iαu ω̂ + iα u'' ψ̂ = 0,      (α² - ∂_y²) ψ̂ = ω̂,   ψ̂(0) = ψ̂(1) = 0,
//! ```
//!
//! and, in the absence of discrete and embedded eigenvalues, the solution is
//! carried by the continuous spectrum c ∈ [u(0), u(1)]: the stream function
//! is an integral of generalized eigenfunctions against a spectral density
//! built from boundary values of the resolvent. This crate computes that
//! representation — the Rayleigh solutions, the spectral coefficients, and
//! the resulting time evolution — alongside a direct time-stepping oracle
//! used to cross-validate it.
//!
//! Modules build on each other bottom-up:
//!
//! * [`profile`] — monotone background flows and their derivatives;
//! * [`quadrature`] — panel meshes, graded refinement, principal-value and
//!   oscillatory integrals, special functions;
//! * [`ode`] — an adaptive Runge–Kutta pair for complex two-state systems;
//! * [`rayleigh`] — regularized Rayleigh solutions φ₁, φ and the boundary
//!   kernels Γ₀, Γ₁;
//! * [`spectrum`] — the spectral density A - iB, embedded-eigenvalue scans,
//!   winding-number certificates;
//! * [`evolution`] — spectral coefficients μ for given initial data, the
//!   time-dependent fields ψ̂, Ŵ, and derived diagnostics;
//! * [`oracle`] — an independent finite-difference time stepper;
//! * [`config`] — experiment configuration for the command-line driver.

pub mod config;
pub mod error;
pub mod evolution;
pub mod ode;
pub mod oracle;
pub mod profile;
pub mod quadrature;
pub mod rayleigh;
pub mod spectrum;

pub use error::{Error, Result};
pub use profile::{make_profile, InflectionPoints, ProfileKind, ShearProfile};
