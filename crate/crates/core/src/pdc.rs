//! Two-mode squeezed vacuum from parametric down-conversion, resolved into
//! Schmidt modes, and the conversions between the quantities used to
//! characterize a source (mean photon number, squeezing in dB, marginal g²,
//! effective mode number K).

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockVector;
use crate::math::{bisect, ln_factorials};

const NORM_TOL: f64 = 1e-10;

/// Normalized Schmidt coefficients `c_k` (descending, `Σ c_k² = 1`) and the
/// parametric gain `B`. Mode `k` is squeezed with `λ_k = tanh(c_k B)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtSpectrum {
    gain: f64,
    coefficients: Vec<f64>,
}

impl SchmidtSpectrum {
    pub fn new(gain: f64, coefficients: Vec<f64>) -> Result<Self> {
        if !(gain >= 0.0) || !gain.is_finite() {
            return Err(Error::param("gain B", gain, "must be finite and non-negative"));
        }
        if coefficients.is_empty() {
            return Err(Error::Degenerate("no Schmidt coefficients".into()));
        }
        for w in coefficients.windows(2) {
            if w[1] > w[0] {
                return Err(Error::param("Schmidt coefficient", w[1], "coefficients must be descending"));
            }
        }
        if let Some(c) = coefficients.iter().find(|c| !(**c >= 0.0)) {
            return Err(Error::param("Schmidt coefficient", *c, "must be non-negative"));
        }
        let norm: f64 = coefficients.iter().map(|c| c * c).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::param("Σ c_k²", norm, "Schmidt coefficients must be normalized"));
        }
        Ok(Self { gain, coefficients })
    }

    /// A single Schmidt mode with gain `B`.
    pub fn single_mode(gain: f64) -> Result<Self> {
        Self::new(gain, vec![1.0])
    }

    /// Spectrum from a measured mean photon number (summed over Schmidt modes)
    /// and effective mode number. The gain is chosen so that
    /// `Σ_k sinh²(c_k B) = n̄`.
    pub fn from_characterization(mean_photons: f64, mode_number: f64, n_modes: usize) -> Result<Self> {
        if !(mean_photons >= 0.0) || !mean_photons.is_finite() {
            return Err(Error::param("mean photon number", mean_photons, "must be non-negative"));
        }
        let coefficients = schmidt_from_mode_number(mode_number, n_modes)?;
        let total = |b: f64| coefficients.iter().map(|c| (c * b).sinh().powi(2)).sum::<f64>();
        let gain = if mean_photons == 0.0 {
            0.0
        } else {
            let mut hi = 1.0;
            while total(hi) < mean_photons {
                hi *= 2.0;
                if hi > 1e3 {
                    return Err(Error::param("mean photon number", mean_photons, "too large"));
                }
            }
            bisect(0.0, hi, 1e-15, |b| total(b) - mean_photons).expect("bracketed by construction")
        };
        Self::new(gain, coefficients)
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn n_modes(&self) -> usize {
        self.coefficients.len()
    }

    /// Per-mode squeezing strengths `λ_k = tanh(c_k B)`.
    pub fn lambdas(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| (c * self.gain).tanh()).collect()
    }

    /// Effective mode number `K = 1 / Σ c_k⁴`.
    pub fn mode_number(&self) -> f64 {
        mode_number(&self.coefficients)
    }

    /// Total mean photon number per arm, `Σ sinh²(c_k B)`.
    pub fn mean_photons(&self) -> f64 {
        self.coefficients.iter().map(|c| (c * self.gain).sinh().powi(2)).sum()
    }
}

/// Run-config form of a source: either the spectrum itself or the
/// characterization numbers it is derived from. Mixing fields of both forms
/// is rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SourceSpec {
    Explicit(ExplicitSource),
    Characterized(CharacterizedSource),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitSource {
    #[serde(rename = "gain_B")]
    pub gain: f64,
    pub coefficients: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterizedSource {
    pub mean_photons: f64,
    #[serde(rename = "mode_number_K")]
    pub mode_number: f64,
}

impl SourceSpec {
    pub fn to_spectrum(&self, n_modes: usize) -> Result<SchmidtSpectrum> {
        match self {
            SourceSpec::Explicit(e) => SchmidtSpectrum::new(e.gain, e.coefficients.clone()),
            SourceSpec::Characterized(c) => {
                SchmidtSpectrum::from_characterization(c.mean_photons, c.mode_number, n_modes)
            }
        }
    }
}

/// `K = 1 / Σ c_k⁴` for normalized coefficients.
pub fn mode_number(coefficients: &[f64]) -> f64 {
    1.0 / coefficients.iter().map(|c| c.powi(4)).sum::<f64>()
}

/// Pure two-mode squeezed vacuum `√(1−λ²) Σ λⁿ |n,n⟩`, renormalized after
/// truncation. Errors when the top two levels hold 1e-6 or more.
pub fn tmsv(lambda: f64, cutoff: usize) -> Result<FockVector> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::param("λ", lambda, "must lie in [0, 1)"));
    }
    let pref = (1.0 - lambda * lambda).sqrt();
    let psi = FockVector::two_mode_from_fn(cutoff, |s, i| {
        if s == i {
            pref * lambda.powi(s as i32)
        } else {
            0.0
        }
    })?;
    psi.check_truncation()?;
    psi.normalized()
}

/// Single-mode squeezed vacuum squeezed along `X` (`Var X = e^{-2r}/2`),
/// from its closed-form even-photon expansion.
pub fn squeezed_vacuum(r: f64, cutoff: usize) -> Result<FockVector> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::param("squeezing parameter", r, "must be finite and non-negative"));
    }
    let lnf = ln_factorials(cutoff);
    let th = r.tanh();
    let pref = 1.0 / r.cosh().sqrt();
    let amps: Vec<C64> = (0..cutoff)
        .map(|n| {
            if n % 2 == 1 {
                return C64::new(0.0, 0.0);
            }
            let k = n / 2;
            let mag = (0.5 * lnf[n] - k as f64 * 2f64.ln() - lnf[k]).exp() * th.powi(k as i32);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            C64::new(pref * sign * mag, 0.0)
        })
        .collect();
    let psi = FockVector::new(cutoff, 1, amps)?;
    psi.check_truncation()?;
    psi.normalized()
}

/// Gain from the mean photon number of a single-mode source, `B = asinh √n̄`.
pub fn gain_from_mean_photons(mean_photons: f64) -> Result<f64> {
    if !(mean_photons >= 0.0) || !mean_photons.is_finite() {
        return Err(Error::param("mean photon number", mean_photons, "must be non-negative"));
    }
    Ok(mean_photons.sqrt().asinh())
}

/// Squeezing in dB of the symmetrized single-mode state, `−10 log₁₀ e^{−2B}`.
pub fn squeezing_db_from_gain(gain: f64) -> f64 {
    20.0 * gain * std::f64::consts::LOG10_E
}

/// Inverse of [`squeezing_db_from_gain`].
pub fn gain_from_squeezing_db(db: f64) -> f64 {
    db / (20.0 * std::f64::consts::LOG10_E)
}

/// Effective mode number from the marginal second-order correlation,
/// `K = 1/(g² − 1)`.
pub fn mode_number_from_g2(g2: f64) -> Result<f64> {
    if !(g2 > 1.0 && g2 <= 2.0) {
        return Err(Error::param("g2", g2, "must lie in (1, 2]"));
    }
    Ok(1.0 / (g2 - 1.0))
}

/// Normalized, descending coefficients with `1/Σ c_k⁴ = K`.
///
/// Two modes use the closed form `c₀² = (1 + √(2/K − 1))/2`. More modes use a
/// geometric profile `c_k² ∝ q^k` with `q` solved for K; for two modes the two
/// agree.
pub fn schmidt_from_mode_number(k: f64, n_modes: usize) -> Result<Vec<f64>> {
    if n_modes < 1 {
        return Err(Error::param("n_modes", n_modes as f64, "need at least one mode"));
    }
    let kmax = n_modes as f64;
    if !(k >= 1.0 && k <= kmax) {
        return Err(Error::param("mode number K", k, "must lie in [1, n_modes]"));
    }
    if n_modes == 1 || k == 1.0 {
        let mut c = vec![0.0; n_modes];
        c[0] = 1.0;
        return Ok(c);
    }
    if n_modes == 2 {
        let x = 0.5 * (1.0 + (2.0 / k - 1.0).max(0.0).sqrt());
        return Ok(vec![x.sqrt(), (1.0 - x).sqrt()]);
    }
    let profile = |q: f64| -> Vec<f64> {
        let w: Vec<f64> = (0..n_modes).map(|j| q.powi(j as i32)).collect();
        let s: f64 = w.iter().sum();
        w.iter().map(|x| (x / s).sqrt()).collect()
    };
    let q = bisect(0.0, 1.0, 1e-15, |q| mode_number(&profile(q)) - k)
        .ok_or_else(|| Error::param("mode number K", k, "not representable"))?;
    Ok(profile(q))
}

/// One two-mode squeezed vacuum per Schmidt mode. The product state is kept
/// as a list; it is never expanded into a single tensor.
pub fn multimode_state(spec: &SchmidtSpectrum, cutoff: usize) -> Result<Vec<FockVector>> {
    spec.lambdas().into_iter().map(|l| tmsv(l, cutoff)).collect()
}
