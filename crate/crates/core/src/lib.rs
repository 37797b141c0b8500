//! Analysis toolkit for successive interference cancellation (SIC) on a
//! shared multiple-access channel.
//!
//! Given `n` concurrent transmissions with power control calibrated so that a
//! single transmitter is decoded with probability `1 - epsilon`, the library
//! computes how many packets a SIC receiver decodes per slot and the resulting
//! sum-rate, three ways:
//!
//! * exactly for Rayleigh fading at finite `n` ([`sic_exact`]),
//! * in the large-`n` limit with the scaled target SNIR `gamma = 1/(alpha n)`
//!   ([`asymptotics`] for Rayleigh, [`general_fading`] for arbitrary mean-1
//!   channel gain distributions),
//! * by Monte Carlo simulation of the decoding chain ([`montecarlo`]).
//!
//! The shared numerical substrate (Laplace/Fourier inversion, adaptive
//! quadrature, bracketed root finding, incomplete gamma machinery) lives in
//! [`numerics`]; channel gain models and order-statistics sampling live in
//! [`fading`].
//!
//! # Example
//!
//! Decodable fraction and sum-rate limit for Rayleigh fading with perfect
//! cancellation at `alpha = 0.32`:
//!
//! ```
//! use sicasy_core::asymptotics::{zeta, AsymptoticCurve};
//! use sicasy_core::fading::{calibrate, make_rayleigh};
//!
//! let threshold = calibrate(&make_rayleigh(), 0.1).unwrap();
//! let curve = AsymptoticCurve::new(0.32, 0.0).unwrap();
//! let limit = zeta(&curve, threshold.c).unwrap();
//! assert!((limit.zeta - 0.879).abs() < 1e-3);
//! assert!((limit.u_infinity - 3.96).abs() < 0.01);
//! ```

// `!(x > 0.0)` style domain checks are deliberate: they reject NaN along
// with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod fading;
pub mod general_fading;
pub mod montecarlo;
pub mod numerics;
pub mod sic_exact;

pub use error::{Error, Result};
