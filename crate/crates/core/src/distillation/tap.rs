use nalgebra::DMatrix;

use super::MixtureWeights;
use crate::error::{Error, Result};
use crate::fock::{BeamSplitter, FockVector};
use crate::math::{binomial, binomial_pmf, ln_factorials};

/// `A[(j, m)]`: amplitude for `j` photons entering a tap of amplitude
/// transmissivity `t` to leave `j − m` in the kept arm and `m` in the tap arm,
/// read off the splitter acting on `|j⟩ ⊗ |0⟩`.
pub fn tap_amplitudes(t: f64, cutoff: usize) -> Result<DMatrix<f64>> {
    let bs = BeamSplitter::new(t)?;
    let lnf = ln_factorials(cutoff + 1);
    let mut a = DMatrix::zeros(cutoff, cutoff);
    for j in 0..cutoff {
        let col = bs.column(j, 0, &lnf);
        for m in 0..=j {
            a[(j, m)] = col[j - m];
        }
    }
    Ok(a)
}

/// Probabilities `p[(m, n)]` of finding `m` photons in the signal tap arm and
/// `n` in the idler tap arm, for `m, n ≤ max_subtracted`.
pub fn tap_outcome_probabilities(state: &FockVector, t: f64, max_subtracted: usize) -> Result<DMatrix<f64>> {
    if state.modes() != 2 {
        return Err(Error::ModeMismatch {
            expected: 2,
            got: state.modes(),
        });
    }
    state.check_truncation()?;
    let n = state.cutoff();
    let a = tap_amplitudes(t, n)?;
    let k = max_subtracted + 1;
    let mut p = DMatrix::zeros(k, k);
    for s in 0..n {
        for i in 0..n {
            let w = state.amp2(s, i).norm_sqr();
            if w == 0.0 {
                continue;
            }
            for m in 0..k.min(s + 1) {
                let am = a[(s, m)] * a[(s, m)];
                for l in 0..k.min(i + 1) {
                    p[(m, l)] += w * am * a[(i, l)] * a[(i, l)];
                }
            }
        }
    }
    Ok(p)
}

/// Same statistics as [`tap_outcome_probabilities`] for a two-mode squeezed
/// vacuum, summed analytically over the pair number `j` up to `max_pairs`.
pub fn tap_outcome_probabilities_exact(
    lambda: f64,
    energy_transmission: f64,
    max_subtracted: usize,
    max_pairs: usize,
) -> DMatrix<f64> {
    let k = max_subtracted + 1;
    let q = 1.0 - energy_transmission;
    let mut p = DMatrix::zeros(k, k);
    for j in 0..max_pairs {
        let w = (1.0 - lambda * lambda) * lambda.powi(2 * j as i32);
        for m in 0..k.min(j + 1) {
            let bm = binomial_pmf(j, m, q);
            for n in 0..k.min(j + 1) {
                p[(m, n)] += w * bm * binomial_pmf(j, n, q);
            }
        }
    }
    p
}

/// Detection matrix `L[(i, j)] = C(j, i) ηⁱ (1 − η)^{j−i}`: probability of
/// registering `i` of `j` incident photons.
pub fn heralding_matrix(eta: f64, size: usize) -> DMatrix<f64> {
    DMatrix::from_fn(size, size, |i, j| {
        if i > j {
            0.0
        } else {
            binomial(j, i) * eta.powi(i as i32) * (1.0 - eta).powi((j - i) as i32)
        }
    })
}

/// `p′ = L p Lᵀ`.
pub fn heralding_rescale(p: &DMatrix<f64>, eta: f64) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::param("heralding efficiency", eta, "must lie in [0, 1]"));
    }
    if p.nrows() != p.ncols() {
        return Err(Error::Shape(format!("{}x{} tap statistics", p.nrows(), p.ncols())));
    }
    let l = heralding_matrix(eta, p.nrows());
    Ok(&l * p * l.transpose())
}

/// Weights of the heralded mixture when one click on each arm may come from
/// either Schmidt mode.
pub fn mixture_weights(p0: &DMatrix<f64>, p1: &DMatrix<f64>) -> Result<MixtureWeights> {
    if p0.nrows() < 2 || p0.ncols() < 2 || p1.nrows() < 2 || p1.ncols() < 2 {
        return Err(Error::Shape("tap statistics need at least 2x2 entries".into()));
    }
    let w0 = p0[(1, 1)] * p1[(0, 0)];
    let w1 = 2.0 * p0[(1, 0)] * p1[(0, 1)];
    let w2 = p0[(0, 0)] * p1[(1, 1)];
    let den = w0 + w1 + w2;
    if !(den > 0.0) {
        return Err(Error::Degenerate("no coincidence outcome has non-zero probability".into()));
    }
    MixtureWeights::new([w0 / den, w1 / den, w2 / den])
}
