use super::conditioning::{conditional_two_mode_vector, detected_single_mode_state};
use super::tap::{heralding_rescale, mixture_weights, tap_outcome_probabilities};
use super::{EfficiencyBudget, MixtureWeights, TapConfig};
use crate::error::{Error, Result};
use crate::fock::{DensityOperator, LossChannel};
use crate::pdc::{tmsv, SchmidtSpectrum};

/// One heralding pattern of the detected mixture: `signal` and `idler` clicks
/// credited to Schmidt mode 0, the rest to mode 1.
#[derive(Clone, Debug)]
pub struct Branch {
    pub signal: usize,
    pub idler: usize,
    pub weight: f64,
    /// Lossless detected state of mode 0 for this pattern.
    pub state: DensityOperator,
}

/// The detected state of a two-Schmidt-mode source after heralding, with its
/// lossless branches. Zero-weight branches are not built.
#[derive(Clone, Debug)]
pub struct DetectedMixture {
    /// Three-component weights, for one click on each arm.
    pub weights: Option<MixtureWeights>,
    pub branches: Vec<Branch>,
    /// Efficiency of the loss channel applied to the mixture.
    pub efficiency: f64,
    pub state: DensityOperator,
}

impl DetectedMixture {
    pub fn branch(&self, signal: usize, idler: usize) -> Option<&Branch> {
        self.branches.iter().find(|b| b.signal == signal && b.idler == idler)
    }
}

/// Heralded detected state of Schmidt mode 0.
///
/// With `subtract = [m, n]` clicks, pattern `(m₀, n₀)` has weight
/// `p′⁽⁰⁾[m₀, n₀] · p′⁽¹⁾[m − m₀, n − n₀]`; for one click on each arm this is
/// the three-component mixture of [`mixture_weights`].
///
/// Each branch is conditioned on the effective tap (every reflected photon
/// detected), so the heralding loss and the tap's undetected remainder become
/// part of the loss channel applied to the mixture.
pub fn detected_mixture(
    spec: &SchmidtSpectrum,
    tap: &TapConfig,
    budget: &EfficiencyBudget,
    cutoff: usize,
) -> Result<DetectedMixture> {
    tap.validate()?;
    budget.validate()?;
    if spec.n_modes() > 2 {
        return Err(Error::param(
            "Schmidt modes",
            spec.n_modes() as f64,
            "the heralded mixture covers at most two modes",
        ));
    }
    let lambdas = spec.lambdas();
    let psi0 = tmsv(lambdas[0], cutoff)?;
    let psi1 = tmsv(lambdas.get(1).copied().unwrap_or(0.0), cutoff)?;
    let t = tap.transmissivity();
    let eta = tap.heralding_efficiency;
    let [ms, mi] = tap.subtract;
    if ms.max(mi) >= cutoff {
        return Err(Error::param("subtracted photons", ms.max(mi) as f64, "must be below the cutoff"));
    }
    // lossy detectors mix every raw count into the heralded pattern, so the
    // rescale runs over the full photon-number range
    let p0 = heralding_rescale(&tap_outcome_probabilities(&psi0, t, cutoff - 1)?, eta)?;
    let p1 = heralding_rescale(&tap_outcome_probabilities(&psi1, t, cutoff - 1)?, eta)?;

    let mut raw = Vec::new();
    for s in 0..=ms {
        for i in 0..=mi {
            let w = p0[(s, i)] * p1[(ms - s, mi - i)];
            if w > 0.0 {
                raw.push((s, i, w));
            }
        }
    }
    let total: f64 = raw.iter().map(|r| r.2).sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate(format!("heralding outcome {:?} has zero probability", tap.subtract)));
    }

    let weights = if tap.subtract == [1, 1] {
        let w = mixture_weights(&p0, &p1)?;
        let by = |s: usize, i: usize| raw.iter().filter(|r| r.0 == s && r.1 == i).map(|r| r.2).sum::<f64>() / total;
        let sums = [by(1, 1), by(1, 0) + by(0, 1), by(0, 0)];
        for (a, b) in w.alpha.iter().zip(sums) {
            if (a - b).abs() > 1e-12 {
                return Err(Error::Degenerate(format!("mixture weights {:?} disagree with branch sums {sums:?}", w.alpha)));
            }
        }
        Some(w)
    } else {
        None
    };

    let t_eff = tap.effective_energy_transmission().sqrt();
    let mut branches = Vec::with_capacity(raw.len());
    for (s, i, w) in raw {
        let cond = conditional_two_mode_vector(&psi0, t_eff, [s, i])?;
        branches.push(Branch {
            signal: s,
            idler: i,
            weight: w / total,
            state: detected_single_mode_state(&cond.state)?,
        });
    }
    // signal and idler roles are interchangeable for a two-mode squeezed vacuum
    for b in &branches {
        if b.signal < b.idler {
            if let Some(m) = branches.iter().find(|c| c.signal == b.idler && c.idler == b.signal) {
                let gap = (b.state.matrix() - m.state.matrix()).norm();
                if gap > 1e-9 {
                    return Err(Error::Degenerate(format!(
                        "patterns ({},{}) and ({},{}) differ by {gap:.3e}",
                        b.signal, b.idler, m.signal, m.idler
                    )));
                }
            }
        }
    }
    log::debug!(
        "branch weights {:?}",
        branches.iter().map(|b| (b.signal, b.idler, b.weight)).collect::<Vec<_>>()
    );

    let parts: Vec<(f64, &DensityOperator)> = branches.iter().map(|b| (b.weight, &b.state)).collect();
    let mixed = DensityOperator::mix(&parts)?;
    let efficiency = budget.after_tap(tap);
    let state = LossChannel::new(efficiency)?.apply(&mixed)?;
    state.warn_if_truncated("detected mixture");
    Ok(DetectedMixture {
        weights,
        branches,
        efficiency,
        state,
    })
}

/// The final detected single-mode state, see [`detected_mixture`].
pub fn assemble_detected_mixture(
    spec: &SchmidtSpectrum,
    tap: &TapConfig,
    budget: &EfficiencyBudget,
    cutoff: usize,
) -> Result<DensityOperator> {
    Ok(detected_mixture(spec, tap, budget, cutoff)?.state)
}

/// Detected state of Schmidt mode 0 without heralding, after the full budget.
pub fn undistilled_state(spec: &SchmidtSpectrum, budget: &EfficiencyBudget, cutoff: usize) -> Result<DensityOperator> {
    budget.validate()?;
    let rho = detected_single_mode_state(&tmsv(spec.lambdas()[0], cutoff)?)?;
    LossChannel::new(budget.total())?.apply(&rho)
}
