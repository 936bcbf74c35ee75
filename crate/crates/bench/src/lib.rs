//! Shared fixtures for the benchmarks.

use distill_core::distillation::{detected_mixture, EfficiencyBudget, TapConfig};
use distill_core::pdc::SchmidtSpectrum;
use distill_core::DensityOperator;

/// Detected mixture at the experimental operating point and cutoff `n`.
pub fn operating_point_mixture(n: usize) -> DensityOperator {
    let spec = SchmidtSpectrum::from_characterization(0.56, 1.23, 2).expect("valid spectrum");
    detected_mixture(&spec, &TapConfig::experiment(), &EfficiencyBudget::experiment(), n)
        .expect("operating point fits the cutoff")
        .state
}
