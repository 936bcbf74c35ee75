use num_complex::Complex64 as C64;

use super::tap::tap_amplitudes;
use super::Conditioned;
use crate::error::{Error, Result};
use crate::fock::{reduced_state, BeamSplitter, DensityOperator, FockVector};

/// Closed-form state heralded by one photon on each tap of a two-mode squeezed
/// vacuum, with amplitudes `∝ λⁿ (n+1) T^{2n}` on `|n,n⟩`. The probability is
/// that of the heralding event.
///
/// `T = 1` never subtracts anything and is rejected; the normalized limit is
/// available from [`subtracted_state_limit`].
pub fn subtracted_state_ideal(lambda: f64, t: f64, cutoff: usize) -> Result<Conditioned<FockVector>> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::param("λ", lambda, "must lie in [0, 1)"));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::param("tap transmissivity", t, "must lie in (0, 1]"));
    }
    if t == 1.0 {
        return Err(Error::Degenerate(
            "tap transmissivity 1 has zero subtraction probability".into(),
        ));
    }
    let t2 = t * t;
    let weight = |n: usize| lambda.powi(n as i32) * (n + 1) as f64 * t2.powi(n as i32);
    let psi = FockVector::two_mode_from_fn(cutoff, |s, i| if s == i { weight(s) } else { 0.0 })?;
    psi.check_truncation()?;
    // Σ_n (1−λ²) λ^{2n+2} (n+1)² T^{4n} (1−T²)²
    let scale = (1.0 - lambda * lambda) * lambda * lambda * (1.0 - t2) * (1.0 - t2);
    let probability = scale * psi.norm_sqr();
    Ok(Conditioned {
        state: psi.normalized()?,
        probability,
    })
}

/// Normalized `T → 1` limit of [`subtracted_state_ideal`], `∝ λⁿ (n+1)`.
pub fn subtracted_state_limit(lambda: f64, cutoff: usize) -> Result<FockVector> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::param("λ", lambda, "must lie in [0, 1)"));
    }
    let psi = FockVector::two_mode_from_fn(cutoff, |s, i| {
        if s == i {
            lambda.powi(s as i32) * (s + 1) as f64
        } else {
            0.0
        }
    })?;
    psi.check_truncation()?;
    psi.normalized()
}

/// Passes each arm of a two-mode pure state through a tap of amplitude
/// transmissivity `t` and projects the tap arms on `subtract = [m, n]`
/// photons.
pub fn conditional_two_mode_vector(state: &FockVector, t: f64, subtract: [usize; 2]) -> Result<Conditioned<FockVector>> {
    if state.modes() != 2 {
        return Err(Error::ModeMismatch {
            expected: 2,
            got: state.modes(),
        });
    }
    let n = state.cutoff();
    let [m, k] = subtract;
    if m >= n || k >= n {
        return Err(Error::param("subtracted photons", m.max(k) as f64, "must be below the cutoff"));
    }
    let a = tap_amplitudes(t, n)?;
    let mut amps = vec![C64::new(0.0, 0.0); n * n];
    for s in 0..n - m {
        let fs = a[(s + m, m)];
        for i in 0..n - k {
            amps[s * n + i] = state.amp2(s + m, i + k) * fs * a[(i + k, k)];
        }
    }
    let out = FockVector::new(n, 2, amps)?;
    let probability = out.norm_sqr() / state.norm_sqr();
    if !(probability > 0.0) {
        return Err(Error::Degenerate(format!("heralding outcome {subtract:?} has zero probability")));
    }
    Ok(Conditioned {
        state: out.normalized()?,
        probability,
    })
}

/// Density-operator form of [`conditional_two_mode_vector`].
pub fn conditional_two_mode_state(
    state: &FockVector,
    t: f64,
    subtract: [usize; 2],
) -> Result<Conditioned<DensityOperator>> {
    let c = conditional_two_mode_vector(state, t, subtract)?;
    Ok(Conditioned {
        state: c.state.to_density(),
        probability: c.probability,
    })
}

/// Interferes the two arms on a balanced splitter and keeps port A.
///
/// The input is embedded at cutoff `2N − 1` first, so the splitter is exact
/// and the returned state has that cutoff.
pub fn detected_single_mode_state(state: &FockVector) -> Result<DensityOperator> {
    if state.modes() != 2 {
        return Err(Error::ModeMismatch {
            expected: 2,
            got: state.modes(),
        });
    }
    let wide = state.with_cutoff(2 * state.cutoff() - 1)?;
    let out = BeamSplitter::balanced().apply(&wide)?;
    reduced_state(&out, 0)?.normalized()
}

/// [`detected_single_mode_state`] for a mixed two-mode input, applied to each
/// eigenvector of the input.
pub fn detected_single_mode_density(rho: &DensityOperator) -> Result<DensityOperator> {
    rho.require_modes(2)?;
    let (vals, vecs) = rho.clipped_eigen()?;
    let mut parts = Vec::new();
    for (k, w) in vals.iter().enumerate() {
        if *w <= 1e-14 {
            continue;
        }
        let v = FockVector::new(rho.cutoff(), 2, vecs.column(k).iter().copied().collect())?;
        parts.push((*w, detected_single_mode_state(&v)?));
    }
    if parts.is_empty() {
        return Err(Error::Degenerate("zero density operator".into()));
    }
    let refs: Vec<(f64, &DensityOperator)> = parts.iter().map(|(w, r)| (*w, r)).collect();
    DensityOperator::mix(&refs)?.normalized()
}
