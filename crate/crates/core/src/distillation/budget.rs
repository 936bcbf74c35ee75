use serde::{Deserialize, Serialize};

use super::TapConfig;
use crate::error::{Error, Result};

/// Multiplicative efficiency factors between the source and the homodyne
/// photodiodes. The LO visibility enters squared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencyBudget {
    pub hom_visibility: f64,
    pub linear_losses: f64,
    pub tap_bs: f64,
    pub lo_visibility: f64,
    pub pd_quantum_efficiency: f64,
    /// Used in place of the factor product when set. Both values are logged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_override: Option<f64>,
}

impl EfficiencyBudget {
    /// The experimental loss table, with its quoted total of 0.428.
    pub fn experiment() -> Self {
        Self {
            hom_visibility: 0.75,
            linear_losses: 0.87,
            tap_bs: 0.9,
            lo_visibility: 0.91,
            pd_quantum_efficiency: 0.9,
            total_override: Some(0.428),
        }
    }

    pub fn unity() -> Self {
        Self {
            hom_visibility: 1.0,
            linear_losses: 1.0,
            tap_bs: 1.0,
            lo_visibility: 1.0,
            pd_quantum_efficiency: 1.0,
            total_override: None,
        }
    }

    /// Lossless apart from the signal/idler interference visibility.
    pub fn hom_only(visibility: f64) -> Self {
        Self {
            hom_visibility: visibility,
            ..Self::unity()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("hom_visibility", self.hom_visibility),
            ("linear_losses", self.linear_losses),
            ("tap_bs", self.tap_bs),
            ("lo_visibility", self.lo_visibility),
            ("pd_quantum_efficiency", self.pd_quantum_efficiency),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("budget.{name} = {v} must lie in (0, 1]")));
            }
        }
        if let Some(v) = self.total_override {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("budget.total_override = {v} must lie in (0, 1]")));
            }
        }
        Ok(())
    }

    /// Product of the factors, LO visibility squared.
    pub fn product(&self) -> f64 {
        self.hom_visibility
            * self.linear_losses
            * self.tap_bs
            * self.lo_visibility
            * self.lo_visibility
            * self.pd_quantum_efficiency
    }

    /// Total efficiency applied to the detected state.
    pub fn total(&self) -> f64 {
        let product = self.product();
        match self.total_override {
            Some(t) => {
                log::info!("total efficiency {t} (override; factor product {product:.4})");
                t
            }
            None => {
                log::info!("total efficiency {product:.4} (factor product)");
                product
            }
        }
    }

    /// Efficiency applied after a conditioning on the effective tap of `tap`.
    /// The budget's tap factor is replaced by the tap's own undetected
    /// remainder `T² / T_eff²`.
    pub fn after_tap(&self, tap: &TapConfig) -> f64 {
        let downstream = self.total() / self.tap_bs;
        (downstream * tap.energy_transmission / tap.effective_energy_transmission()).min(1.0)
    }
}
