use serde::Serialize;

use super::marginal::{marginal, MarginalTable, TAIL_TOLERANCE};
use super::QuadratureAxis;
use crate::error::{Error, Result};
use crate::fock::DensityOperator;

/// First four cumulants from central moments: `κ₁ = m₁`, `κ₂ = μ₂`,
/// `κ₃ = μ₃`, `κ₄ = μ₄ − 3μ₂²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CumulantSet {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub theta: Option<f64>,
    /// `None` for values integrated from a state.
    pub n_samples: Option<usize>,
}

impl CumulantSet {
    fn from_moments(m1: f64, mu: [f64; 3], theta: Option<f64>, n_samples: Option<usize>) -> Result<Self> {
        let [mu2, mu3, mu4] = mu;
        if !(mu2 > 0.0) {
            return Err(Error::Degenerate(format!("second central moment {mu2}")));
        }
        Ok(Self {
            k1: m1,
            k2: mu2,
            k3: mu3,
            k4: mu4 - 3.0 * mu2 * mu2,
            theta,
            n_samples,
        })
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.k1, self.k2, self.k3, self.k4]
    }
}

/// Sample cumulants (plain central moments, no small-sample correction).
pub fn cumulants(samples: &[f64]) -> Result<CumulantSet> {
    if samples.len() < 2 {
        return Err(Error::Degenerate(format!("{} samples", samples.len())));
    }
    let n = samples.len() as f64;
    let m1 = samples.iter().sum::<f64>() / n;
    let mut mu = [0.0; 3];
    for x in samples {
        let d = x - m1;
        let d2 = d * d;
        mu[0] += d2;
        mu[1] += d2 * d;
        mu[2] += d2 * d2;
    }
    for m in mu.iter_mut() {
        *m /= n;
    }
    CumulantSet::from_moments(m1, mu, None, Some(samples.len()))
}

/// Cumulants of the marginal of `X_θ`, integrated on a 0.01 grid over 12
/// standard deviations.
pub fn cumulants_exact(rho: &DensityOperator, theta: f64) -> Result<CumulantSet> {
    let axis = QuadratureAxis::with_spacing(rho, theta, 12.0, 0.01)?;
    let p = marginal(rho, &axis)?;
    integrated(axis.xs(), &p, theta)
}

/// [`cumulants_exact`] at many phases, building the marginal table once.
pub fn cumulants_exact_curve(rho: &DensityOperator, thetas: &[f64]) -> Result<Vec<CumulantSet>> {
    let axis = QuadratureAxis::with_spacing(rho, 0.0, 12.0, 0.01)?;
    let table = MarginalTable::new(rho, axis.xs())?;
    thetas
        .iter()
        .map(|&th| {
            let p = table.density(th);
            let mass: f64 = p.iter().sum::<f64>() * axis.spacing();
            if (1.0 - mass).abs() > TAIL_TOLERANCE {
                return Err(Error::GridTooSmall(1.0 - mass));
            }
            integrated(axis.xs(), &p, th)
        })
        .collect()
}

fn integrated(xs: &[f64], p: &[f64], theta: f64) -> Result<CumulantSet> {
    let norm: f64 = p.iter().sum();
    let m1 = xs.iter().zip(p).map(|(x, w)| x * w).sum::<f64>() / norm;
    let mut mu = [0.0; 3];
    for (x, w) in xs.iter().zip(p) {
        let d = x - m1;
        let d2 = d * d;
        mu[0] += w * d2;
        mu[1] += w * d2 * d;
        mu[2] += w * d2 * d2;
    }
    for m in mu.iter_mut() {
        *m /= norm;
    }
    CumulantSet::from_moments(m1, mu, Some(theta), None)
}

/// Standard errors of the sample cumulants from `batches` equal batches.
pub fn cumulant_errors(samples: &[f64], batches: usize) -> Result<[f64; 4]> {
    if batches < 2 || samples.len() < 2 * batches {
        return Err(Error::Degenerate(format!(
            "{} samples in {batches} batches",
            samples.len()
        )));
    }
    let size = samples.len() / batches;
    let sets: Vec<[f64; 4]> = (0..batches)
        .map(|b| cumulants(&samples[b * size..(b + 1) * size]).map(|c| c.as_array()))
        .collect::<Result<_>>()?;
    let mut out = [0.0; 4];
    for (k, o) in out.iter_mut().enumerate() {
        let mean = sets.iter().map(|s| s[k]).sum::<f64>() / batches as f64;
        let var = sets.iter().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        *o = (var / batches as f64).sqrt();
    }
    Ok(out)
}

/// Cumulants of values binned by phase over `[0, 2π)`. Bins with fewer than
/// two values are skipped; `theta` is the bin centre.
pub fn cumulants_by_phase(thetas: &[f64], values: &[f64], bin_width: f64) -> Result<Vec<CumulantSet>> {
    if thetas.len() != values.len() {
        return Err(Error::Shape(format!("{} phases for {} values", thetas.len(), values.len())));
    }
    if !(bin_width > 0.0) {
        return Err(Error::param("bin width", bin_width, "must be positive"));
    }
    let tau = std::f64::consts::TAU;
    let bins = (tau / bin_width).ceil() as usize;
    let mut grouped = vec![Vec::new(); bins];
    for (t, x) in thetas.iter().zip(values) {
        let k = ((t.rem_euclid(tau) / bin_width) as usize).min(bins - 1);
        grouped[k].push(*x);
    }
    let mut out = Vec::new();
    for (k, g) in grouped.iter().enumerate() {
        if g.len() < 2 {
            continue;
        }
        if let Ok(mut c) = cumulants(g) {
            c.theta = Some((k as f64 + 0.5) * bin_width);
            out.push(c);
        }
    }
    Ok(out)
}
