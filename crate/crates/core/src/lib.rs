//! Pseudo-spectral laboratory for the two-dimensional incompressible
//! Navier–Stokes and Euler equations on the periodic torus `[0, 2π)²`.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only numerics:
//!
//! * [`field`]: scalar and velocity fields carried as grid samples and Fourier
//!   coefficients, with spectral calculus (derivatives, inverse Laplacian,
//!   Biot–Savart, 2/3-rule dealiasing, `L²` inner products).
//! * [`solver`]: integrating-factor RK4 for the forced vorticity equation,
//!   with an energy ledger and manufactured-solution residuals.
//! * [`splitting`]: first-order transport/heat operator splitting for
//!   advection–diffusion and its convergence study.
//! * [`rearrangement`]: decreasing rearrangement, the maximal function
//!   `M_s`, Lorentz `L^(1,q)` and Orlicz `L(log L)^α` norms.
//! * [`diagnostics`]: energy balance, dissipation, structure functions,
//!   convergence metrics and sweep verdicts.
//! * [`scenarios`]: Taylor–Green, the oscillating counterexample family,
//!   rearrangement-class vorticity families and seeded random fields.
//!
//! IO, configuration and the command line live in the `vvl` crate.
#![no_std]
// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(test, feature = "rustfft"))]
extern crate std;

pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod quadrature;
pub mod rearrangement;
pub mod scenarios;
pub mod solver;
pub mod splitting;

pub use error::{Error, Result};
pub use field::{SpectralField, VelocityField};
pub use grid::GridSpec;

/// Complex scalar used for Fourier coefficients.
pub type Complex = num_complex::Complex64;
