//! JSON run configuration: one section per stage, every seed explicit.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::Value;

use crate::distillation::{EfficiencyBudget, TapConfig};
use crate::error::{Error, Result};
use crate::pdc::{CharacterizedSource, ExplicitSource, SchmidtSpectrum, SourceSpec};
use crate::phase::PhaseSettings;
use crate::tomography::{BinSpec, MlSettings};

/// Largest single-mode cutoff accepted from a config; the detected states
/// live at `2N − 1`.
pub const MAX_CUTOFF: usize = 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    /// Per-arm cutoff of the two-mode states.
    pub cutoff: usize,
    pub schmidt_modes: usize,
    pub seed: u64,
    pub tomography: TomographyConfig,
    pub cumulants: CumulantConfig,
    pub wigner: WignerConfig,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            cutoff: 24,
            schmidt_modes: 2,
            seed: 0,
            tomography: TomographyConfig::default(),
            cumulants: CumulantConfig::default(),
            wigner: WignerConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographyConfig {
    pub samples: usize,
    /// Distinct random phases the samples are spread over.
    pub phases: usize,
    pub bins: BinSpec,
    pub ml: MlSettings,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            samples: 250_000,
            phases: 1000,
            bins: BinSpec::default(),
            ml: MlSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CumulantConfig {
    pub bin_deg: f64,
    pub max_deg: f64,
    pub samples_per_bin: usize,
}

impl Default for CumulantConfig {
    fn default() -> Self {
        Self {
            bin_deg: 0.5,
            max_deg: 180.0,
            samples_per_bin: 8000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerConfig {
    pub half_width: f64,
    pub step: f64,
}

impl Default for WignerConfig {
    fn default() -> Self {
        Self {
            half_width: 4.0,
            step: 0.05,
        }
    }
}

/// Quantity varied by a sweep; the rest of the config stays fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Squeezing of the gain `B`, in dB; characterized sources keep `K`.
    SqueezingDb,
    TapEnergyTransmission,
    HeraldingEfficiency,
    ModeNumber,
    HomVisibility,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            parameter: SweepParameter::SqueezingDb,
            values: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub source: SourceSpec,
    pub tap: TapConfig,
    pub budget: EfficiencyBudget,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub phase: PhaseSettings,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

impl Default for RunConfig {
    /// The experiment's operating point.
    fn default() -> Self {
        Self {
            source: SourceSpec::Characterized(CharacterizedSource {
                mean_photons: 0.56,
                mode_number: 1.23,
            }),
            tap: TapConfig::experiment(),
            budget: EfficiencyBudget::experiment(),
            simulation: SimulationConfig::default(),
            phase: PhaseSettings::default(),
            sweep: SweepConfig::default(),
            outputs: OutputConfig::default(),
        }
    }
}

fn section<T: DeserializeOwned>(root: &Value, name: &str) -> Result<Option<T>> {
    match root.get(name) {
        None => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| Error::Config(format!("{name}: {e}"))),
    }
}

fn parse_source(v: &Value) -> Result<SourceSpec> {
    let explicit = serde_json::from_value::<ExplicitSource>(v.clone());
    let characterized = serde_json::from_value::<CharacterizedSource>(v.clone());
    match (explicit, characterized) {
        (Ok(e), _) => Ok(SourceSpec::Explicit(e)),
        (_, Ok(c)) => Ok(SourceSpec::Characterized(c)),
        (Err(a), Err(b)) => Err(Error::Config(format!(
            "source: neither {{gain_B, coefficients}} ({a}) nor {{mean_photons, mode_number_K}} ({b})"
        ))),
    }
}

fn config_err(section: &str, e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{section}: {m}")),
        other => Error::Config(format!("{section}: {other}")),
    }
}

impl RunConfig {
    /// Parses and validates; failures name the offending section and field.
    pub fn from_json(text: &str) -> Result<Self> {
        let root: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("not valid JSON: {e}")))?;
        let obj = root
            .as_object()
            .ok_or_else(|| Error::Config("top level must be an object".into()))?;
        const KNOWN: [&str; 7] = ["source", "tap", "budget", "simulation", "phase", "sweep", "outputs"];
        if let Some(k) = obj.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown section `{k}`, expected one of {KNOWN:?}")));
        }
        let need = |name: &str| {
            root.get(name)
                .ok_or_else(|| Error::Config(format!("missing section `{name}`")))
        };
        let cfg = RunConfig {
            source: parse_source(need("source")?)?,
            tap: section(&root, "tap")?.ok_or_else(|| Error::Config("missing section `tap`".into()))?,
            budget: section(&root, "budget")?.ok_or_else(|| Error::Config("missing section `budget`".into()))?,
            simulation: section(&root, "simulation")?.unwrap_or_default(),
            phase: section(&root, "phase")?.unwrap_or_default(),
            sweep: section(&root, "sweep")?.unwrap_or_default(),
            outputs: section(&root, "outputs")?.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let sim = &self.simulation;
        if sim.cutoff < 2 || sim.cutoff > MAX_CUTOFF {
            return Err(Error::Config(format!(
                "simulation.cutoff must lie in [2, {MAX_CUTOFF}], got {}",
                sim.cutoff
            )));
        }
        if !(1..=2).contains(&sim.schmidt_modes) {
            return Err(Error::Config(format!(
                "simulation.schmidt_modes must be 1 or 2, got {}",
                sim.schmidt_modes
            )));
        }
        self.spectrum().map_err(|e| config_err("source", e))?;
        self.tap.validate().map_err(|e| config_err("tap", e))?;
        self.budget.validate().map_err(|e| config_err("budget", e))?;
        let t = &sim.tomography;
        if t.samples == 0 || t.phases == 0 || t.samples < t.phases {
            return Err(Error::Config(format!(
                "simulation.tomography needs samples ≥ phases ≥ 1, got {} and {}",
                t.samples, t.phases
            )));
        }
        t.bins.validate().map_err(|e| config_err("simulation.tomography.bins", e))?;
        if t.ml.cutoff < 2 || t.ml.max_iter == 0 || !(t.ml.tol > 0.0) {
            return Err(Error::Config(
                "simulation.tomography.ml needs cutoff ≥ 2, max_iter ≥ 1 and tol > 0".into(),
            ));
        }
        let c = &sim.cumulants;
        if !(c.bin_deg > 0.0) || !(c.max_deg >= c.bin_deg) || c.samples_per_bin < 2 {
            return Err(Error::Config(format!(
                "simulation.cumulants needs 0 < bin_deg ≤ max_deg and samples_per_bin ≥ 2, got {c:?}"
            )));
        }
        let w = &sim.wigner;
        if !(w.half_width > 0.0) || !(w.step > 0.0) || w.step > crate::tomography::MAX_WIGNER_SPACING {
            return Err(Error::Config(format!(
                "simulation.wigner needs half_width > 0 and 0 < step ≤ {}, got {w:?}",
                crate::tomography::MAX_WIGNER_SPACING
            )));
        }
        self.phase.validate().map_err(|e| config_err("phase", e))?;
        if self.sweep.values.is_empty() || self.sweep.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep.values must be a non-empty list of finite numbers".into()));
        }
        if self.outputs.dir.is_empty() {
            return Err(Error::Config("outputs.dir must not be empty".into()));
        }
        Ok(())
    }

    pub fn spectrum(&self) -> Result<SchmidtSpectrum> {
        self.source.to_spectrum(self.simulation.schmidt_modes)
    }
}
