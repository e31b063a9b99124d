//! Simulation toolkit for finite-duration measurements on a two-level system
//! that is simultaneously watched by a Markovian measurement apparatus
//! (Lindblad coupling `L = lambda * sigma_alpha`) and dephased by a
//! non-Markovian thermal bath with Ohmic spectral density
//! `J(w) = eta * w * exp(-w / w_c)`.
//!
//! The crate provides:
//!
//! * fixed-size Liouville-space algebra for one qubit ([`qubit`], [`superop`]);
//! * bath correlation functions, dephasing integrals and the Gamma-function
//!   closed form of the sigma_z coherence decay ([`bath`]);
//! * analytic weak-coupling solutions for both measured observables, a pure
//!   Lindblad reference propagator, and a direct integrator of the hybrid
//!   (measurement + noise) master equation ([`dynamics`]);
//! * extraction of the measurement duration `t_M` from the first crossing
//!   `|rho12(t_M)| = f * |rho12(0)|`, together with the closed-form upper
//!   bound `t_M <= -ln(f) / (2 lambda^2)`, and parameter sweeps
//!   ([`measurement`]);
//! * a line-oriented scenario config format and CSV/JSON emitters backing the
//!   `decotime` command-line tool ([`config`], [`report`]).
//!
//! Units: `hbar = k_B = 1`. Frequencies and energies share one reference unit
//! (the natural choice is `w_c = 1`); `lambda^2` is a rate, so `lambda` has
//! units of 1/sqrt(time).

pub mod bath;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod measurement;
pub mod quad;
pub mod qubit;
pub mod report;
pub mod selftest;
pub mod special;
pub mod superop;

pub use error::{Error, Result};

/// Tool version reported by the CLI and embedded in result envelopes.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
