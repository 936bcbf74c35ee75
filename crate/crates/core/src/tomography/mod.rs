//! Density-matrix reconstruction from phase-tagged homodyne samples and
//! Wigner-function evaluation.

mod binning;
mod ml;
mod wigner;

pub use binning::{bin, bin_records, Bin, BinSpec, BinnedData};
pub use ml::{reconstruct, MlSettings, ReconstructionResult};
pub use wigner::{wigner, wigner_at, write_wigner_csv, WignerSurface, MAX_WIGNER_SPACING};
