//! Photon subtraction on two-mode squeezed light.
//!
//! A tap splitter of energy transmission `T²` on each arm sends a small part
//! of the light to a click detector of efficiency `η`. Conditioning on the
//! detector outcomes, interfering the two arms on a balanced splitter and
//! keeping one port gives the detected single-mode state. With two Schmidt
//! modes the heralded outcome is a mixture of the doubly subtracted, singly
//! subtracted and unsubtracted states.

mod budget;
mod conditioning;
mod mixture;
mod tap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use budget::EfficiencyBudget;
pub use conditioning::{
    conditional_two_mode_state, conditional_two_mode_vector, detected_single_mode_density,
    detected_single_mode_state, subtracted_state_ideal, subtracted_state_limit,
};
pub use mixture::{assemble_detected_mixture, detected_mixture, undistilled_state, Branch, DetectedMixture};
pub use tap::{
    heralding_matrix, heralding_rescale, mixture_weights, tap_amplitudes, tap_outcome_probabilities,
    tap_outcome_probabilities_exact,
};

/// Tap splitters and heralding detectors, identical on both arms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TapConfig {
    /// Energy transmission `T²` of each tap splitter.
    #[serde(rename = "tap_energy_transmission")]
    pub energy_transmission: f64,
    pub heralding_efficiency: f64,
    /// Photons heralded on the signal and idler taps.
    pub subtract: [usize; 2],
}

impl TapConfig {
    pub fn new(energy_transmission: f64, heralding_efficiency: f64, subtract: [usize; 2]) -> Result<Self> {
        let tap = Self {
            energy_transmission,
            heralding_efficiency,
            subtract,
        };
        tap.validate()?;
        Ok(tap)
    }

    /// 90/10 taps, `η = 0.002`, one photon from each arm.
    pub fn experiment() -> Self {
        Self {
            energy_transmission: 0.9,
            heralding_efficiency: 0.002,
            subtract: [1, 1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t2 = self.energy_transmission;
        if !(t2 > 0.0 && t2 <= 1.0) {
            return Err(Error::param("tap_energy_transmission", t2, "must lie in (0, 1]"));
        }
        let eta = self.heralding_efficiency;
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::param("heralding_efficiency", eta, "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Amplitude transmissivity `T`.
    pub fn transmissivity(&self) -> f64 {
        self.energy_transmission.sqrt()
    }

    /// Energy transmission of the equivalent tap whose every reflected photon
    /// is detected, `1 − (1 − T²)η`. A lossy detector behind a tap is the same
    /// channel as this tap followed by a loss of `T² / T_eff²` on the kept arm.
    pub fn effective_energy_transmission(&self) -> f64 {
        1.0 - (1.0 - self.energy_transmission) * self.heralding_efficiency
    }
}

/// Weights of the doubly subtracted, singly subtracted and unsubtracted
/// components of the detected mixture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureWeights {
    pub alpha: [f64; 3],
}

impl MixtureWeights {
    pub fn new(alpha: [f64; 3]) -> Result<Self> {
        for a in alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::param("mixture weight", a, "must lie in [0, 1]"));
            }
        }
        let s: f64 = alpha.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::param("Σ α", s, "mixture weights must sum to 1"));
        }
        Ok(Self { alpha })
    }

    /// All weight on the doubly subtracted state.
    pub fn pure() -> Self {
        Self { alpha: [1.0, 0.0, 0.0] }
    }
}

/// A post-selected state together with the probability of the heralding
/// event that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Conditioned<S> {
    pub state: S,
    pub probability: f64,
}
