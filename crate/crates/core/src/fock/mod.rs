//! Truncated Fock-space linear algebra.
//!
//! A basis cutoff `N` keeps photon numbers `0..N` in every mode. Two-mode
//! objects are stored row-major in `(n_signal, n_idler)`.
//!
//! Beam-splitter convention (used everywhere in this crate): real orthogonal
//! mixing with amplitude transmissivity `t` and reflectivity `r = √(1-t²)`,
//!
//! ```text
//! a_s† → t A† + r B†
//! a_i† → −r A† + t B†
//! ```
//!
//! so `|1,0⟩ → t|1,0⟩ + r|0,1⟩`. With this choice a two-mode squeezed vacuum
//! with positive `λ` leaves port `A` (mode 0) squeezed along `X`.

mod density;
mod ops;
mod vector;

pub use density::DensityOperator;
pub use ops::{
    apply_loss, beam_splitter, fidelity, overlap, partial_trace, purity, reduced_state, tensor, BeamSplitter, LossChannel,
    Tensor,
};
pub use vector::FockVector;

use crate::error::{Error, Result};

/// Default basis cutoff.
pub const DEFAULT_CUTOFF: usize = 24;

/// Population allowed in the top two Fock levels before a state counts as truncated.
pub const TRUNCATION_LIMIT: f64 = 1e-6;

pub(crate) const HERMITIAN_TOL: f64 = 1e-10;
pub(crate) const EIGEN_CLIP: f64 = 1e-9;

pub(crate) fn check_modes(cutoff: usize, modes: usize) -> Result<()> {
    if cutoff < 2 {
        return Err(Error::param("cutoff", cutoff as f64, "must be at least 2"));
    }
    if modes != 1 && modes != 2 {
        return Err(Error::param("modes", modes as f64, "must be 1 or 2"));
    }
    Ok(())
}
