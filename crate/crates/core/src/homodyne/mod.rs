//! Quadrature statistics of single-mode states.
//!
//! `X_θ = (a e^{−iθ} + a† e^{iθ})/√2`, so `X_0 = X`, `X_{π/2} = P` and the
//! vacuum variance is ½.

mod cumulants;
mod marginal;
mod record;
mod sample;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::DensityOperator;

pub use cumulants::{cumulant_errors, cumulants, cumulants_by_phase, cumulants_exact, cumulants_exact_curve, CumulantSet};
pub use marginal::{marginal, MarginalTable};
pub use record::{read_records, write_records, QuadratureRecord};
pub use sample::{sample, sample_at_phases, QuadratureSampler, SAMPLER_POINTS};

/// Quadrature variance of the vacuum.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Largest grid spacing accepted for marginals.
pub const MAX_SPACING: f64 = 0.05;

/// A quadrature phase and a uniform position grid symmetric about 0.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureAxis {
    pub theta: f64,
    xs: Vec<f64>,
}

impl QuadratureAxis {
    /// `points` values spanning `[−half_width, half_width]`.
    pub fn new(theta: f64, half_width: f64, points: usize) -> Result<Self> {
        if !(half_width > 0.0) || points < 3 {
            return Err(Error::GridTooCoarse(format!(
                "{points} points over half width {half_width}"
            )));
        }
        let dx = 2.0 * half_width / (points - 1) as f64;
        if dx > MAX_SPACING {
            return Err(Error::GridTooCoarse(format!("spacing {dx:.4} exceeds {MAX_SPACING}")));
        }
        let xs = (0..points).map(|j| -half_width + j as f64 * dx).collect();
        Ok(Self { theta, xs })
    }

    /// Grid covering 8 standard deviations of the widest quadrature of
    /// `rho` (and at least ±8), with `points` values.
    pub fn for_state(rho: &DensityOperator, theta: f64, points: usize) -> Result<Self> {
        Self::new(theta, state_extent(rho, 8.0)?, points)
    }

    /// Grid with roughly the requested spacing over `sigmas` standard
    /// deviations of the widest quadrature.
    pub fn with_spacing(rho: &DensityOperator, theta: f64, sigmas: f64, spacing: f64) -> Result<Self> {
        let half = state_extent(rho, sigmas)?;
        let points = (2.0 * half / spacing).ceil() as usize + 1;
        Self::new(theta, half, points)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn spacing(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }

    pub fn half_width(&self) -> f64 {
        -self.xs[0]
    }
}

fn state_extent(rho: &DensityOperator, sigmas: f64) -> Result<f64> {
    let m = ladder_moments(rho)?;
    let widest = (m.n + 0.5 + m.a2.norm()).sqrt();
    Ok((sigmas * widest + std::f64::consts::SQRT_2 * m.a.norm()).max(sigmas))
}

/// `⟨a⟩`, `⟨a²⟩`, `⟨a†a⟩` of a single-mode state.
#[derive(Clone, Copy, Debug)]
pub struct LadderMoments {
    pub a: C64,
    pub a2: C64,
    pub n: f64,
}

pub fn ladder_moments(rho: &DensityOperator) -> Result<LadderMoments> {
    rho.require_modes(1)?;
    let d = rho.cutoff();
    let mut a = C64::new(0.0, 0.0);
    let mut a2 = C64::new(0.0, 0.0);
    let mut n = 0.0;
    for k in 0..d {
        n += k as f64 * rho.entry(k, k).re;
        if k + 1 < d {
            a += rho.entry(k + 1, k) * ((k + 1) as f64).sqrt();
        }
        if k + 2 < d {
            a2 += rho.entry(k + 2, k) * (((k + 1) * (k + 2)) as f64).sqrt();
        }
    }
    let tr = rho.trace();
    Ok(LadderMoments {
        a: a / tr,
        a2: a2 / tr,
        n: n / tr,
    })
}

/// `⟨X_θ⟩`.
pub fn mean(rho: &DensityOperator, theta: f64) -> Result<f64> {
    let m = ladder_moments(rho)?;
    Ok(std::f64::consts::SQRT_2 * (C64::from_polar(1.0, -theta) * m.a).re)
}

/// `Var(X_θ)` from ladder-operator moments.
pub fn variance(rho: &DensityOperator, theta: f64) -> Result<f64> {
    let m = ladder_moments(rho)?;
    let mu = std::f64::consts::SQRT_2 * (C64::from_polar(1.0, -theta) * m.a).re;
    Ok(m.n + 0.5 + (C64::from_polar(1.0, -2.0 * theta) * m.a2).re - mu * mu)
}

/// Variance relative to the vacuum, in dB.
pub fn variance_db(rho: &DensityOperator, theta: f64) -> Result<f64> {
    Ok(to_db(variance(rho, theta)?))
}

pub fn to_db(variance: f64) -> f64 {
    10.0 * (variance / VACUUM_VARIANCE).log10()
}

pub fn from_db(db: f64) -> f64 {
    VACUUM_VARIANCE * 10f64.powf(db / 10.0)
}

/// `X_θ` as a matrix in the truncated basis.
pub fn quadrature_operator(cutoff: usize, theta: f64) -> nalgebra::DMatrix<C64> {
    let mut x = nalgebra::DMatrix::zeros(cutoff, cutoff);
    let e = C64::from_polar(std::f64::consts::FRAC_1_SQRT_2, -theta);
    for k in 0..cutoff - 1 {
        let s = ((k + 1) as f64).sqrt();
        x[(k, k + 1)] = e * s;
        x[(k + 1, k)] = e.conj() * s;
    }
    x
}
