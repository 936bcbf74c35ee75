//! Simulation and analysis toolkit for squeezing distillation by photon
//! subtraction from pulsed two-mode squeezed vacuum.
//!
//! The crate is organized bottom-up:
//!
//! * [`fock`]: truncated Fock-space states, beam splitters, loss, partial trace, purity, fidelity.
//! * [`pdc`]: Schmidt-mode two-mode squeezed vacuum and characterization conversions.
//! * [`distillation`]: tap statistics, heralding, conditional states and the detected mixture.
//! * [`homodyne`]: quadrature marginals, sampling and cumulants.
//! * [`tomography`]: maximum-likelihood reconstruction and Wigner functions.
//! * [`phase`]: Monte-Carlo relative-phase recovery from reference pulses.
//! * [`config`]: the JSON run configuration shared with the command line tool.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock;
pub mod pdc;
pub mod distillation;
pub mod homodyne;
pub mod tomography;
pub mod phase;
pub mod config;
pub(crate) mod math;
pub mod rng;

pub use error::{Error, Result};
pub use config::RunConfig;
pub use fock::{DensityOperator, FockVector, LossChannel};
