//! Relative-phase recovery for homodyne traces without a phase reference.
//!
//! Each trace holds thousands of undistilled reference pulses and one
//! distilled pulse, all at the same unknown phase. The spread of the
//! per-trace reference variances fixes the squeezing ellipse; a Monte Carlo
//! model of the variance estimator then turns each trace's variance into a
//! random phase draw, and sorting the distilled pulses by those phases gives
//! their quadrature variances. The procedure is repeated to expose the spread
//! that the random assignment introduces.
//!
//! Phases are folded into `[0, π/2]`: a variance cannot tell `θ`, `−θ` and
//! `π − θ` apart, which is harmless for states with a real density matrix
//! (see [`is_phase_symmetric`]).

mod ellipse;
mod model;
mod spread;
mod traces;

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::DensityOperator;

pub use ellipse::{fit_ellipse, EllipseFit, EllipseSettings};
pub use model::{assign_phases, variance_phase_model, ModelSettings, PhaseAssignment, PhaseModel};
pub use spread::{
    assignment_spread, fit_quadrature_curve, run_pipeline, IterationEstimate, PipelineReport, QuadratureFit,
    SpreadStats,
};
pub use traces::{generate_summaries, generate_traces, GroundTruth, TraceGenerator, TraceRecord, TraceSummary};

/// How the relative phase evolves from trace to trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseDrift {
    /// Independent uniform phase on `[0, 2π)` for every trace.
    Uniform,
    /// Slow piezo sweep `offset + amplitude · sin(2π f t)` at trace times
    /// `t = trace_id · trace_interval_s`.
    Sinusoid {
        amplitude: f64,
        frequency_hz: f64,
        trace_interval_s: f64,
        offset: f64,
    },
}

impl PhaseDrift {
    pub fn validate(&self) -> Result<()> {
        if let PhaseDrift::Sinusoid {
            amplitude,
            frequency_hz,
            trace_interval_s,
            offset,
        } = *self
        {
            for (name, v) in [
                ("amplitude", amplitude),
                ("frequency_hz", frequency_hz),
                ("trace_interval_s", trace_interval_s),
                ("offset", offset),
            ] {
                if !v.is_finite() {
                    return Err(Error::Config(format!("phase drift {name} must be finite, got {v}")));
                }
            }
            if trace_interval_s <= 0.0 {
                return Err(Error::Config(format!("trace_interval_s must be positive, got {trace_interval_s}")));
            }
        }
        Ok(())
    }
}

/// Phase settings of the whole recovery pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseSettings {
    pub n_traces: usize,
    pub pulses_per_trace: usize,
    pub iterations: usize,
    pub drift: PhaseDrift,
    pub ellipse: EllipseSettings,
    pub model: ModelSettings,
}

impl Default for PhaseSettings {
    fn default() -> Self {
        Self {
            n_traces: 25_000,
            pulses_per_trace: 8000,
            iterations: 80,
            drift: PhaseDrift::Uniform,
            ellipse: EllipseSettings::default(),
            model: ModelSettings::default(),
        }
    }
}

impl PhaseSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_traces == 0 {
            return Err(Error::Config("n_traces must be at least 1".into()));
        }
        if self.pulses_per_trace < 2 {
            return Err(Error::Config(format!(
                "pulses_per_trace must be at least 2 for a variance, got {}",
                self.pulses_per_trace
            )));
        }
        if self.iterations < 2 {
            return Err(Error::Config(format!("iterations must be at least 2, got {}", self.iterations)));
        }
        self.drift.validate()?;
        self.ellipse.validate()?;
        self.model.validate()
    }
}

/// Maps a phase onto `[0, π/2]` through `θ → −θ` and `θ → π − θ`.
pub fn fold_phase(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    if t > FRAC_PI_2 {
        PI - t
    } else {
        t
    }
}

/// True when the density matrix is real in the Fock basis, so every
/// quadrature marginal satisfies `p_θ(x) = p_{−θ}(x) = p_{π−θ}(−x)`.
pub fn is_phase_symmetric(rho: &DensityOperator) -> bool {
    rho.matrix().iter().all(|z| z.im.abs() < 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn folding_examples() {
        assert_eq!(fold_phase(0.0), 0.0);
        assert!((fold_phase(PI - 0.2) - 0.2).abs() < 1e-12);
        assert!((fold_phase(-0.3) - 0.3).abs() < 1e-12);
        assert!((fold_phase(PI + 0.4) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn drift_validation() {
        PhaseDrift::Uniform.validate().unwrap();
        let bad = PhaseDrift::Sinusoid {
            amplitude: 1.0,
            frequency_hz: 10.0,
            trace_interval_s: 0.0,
            offset: 0.0,
        };
        assert!(bad.validate().is_err());
        let js = r#"{"kind": "sinusoid", "amplitude": 3.0, "frequency_hz": 10.0, "trace_interval_s": 0.001, "offset": 0.5}"#;
        let d: PhaseDrift = serde_json::from_str(js).unwrap();
        d.validate().unwrap();
    }

    #[test]
    fn rotated_states_lose_symmetry() {
        let sq = crate::pdc::squeezed_vacuum(0.4, 20).unwrap().to_density();
        assert!(is_phase_symmetric(&sq));
        assert!(!is_phase_symmetric(&sq.rotated(0.3).unwrap()));
    }

    proptest! {
        #[test]
        fn folded_phase_stays_in_range(t in -50.0f64..50.0) {
            let f = fold_phase(t);
            prop_assert!((0.0..=FRAC_PI_2).contains(&f));
            prop_assert!((f.cos().powi(2) - t.cos().powi(2)).abs() < 1e-9);
        }
    }
}
