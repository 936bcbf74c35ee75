use rand::Rng as _;

use super::marginal::{MarginalTable, TAIL_TOLERANCE};
use super::QuadratureAxis;
use crate::error::{Error, Result};
use crate::fock::DensityOperator;
use crate::rng::{self, Rng};

/// Grid size of the inverse-CDF sampler.
pub const SAMPLER_POINTS: usize = 4096;

/// Inverse-CDF sampler for one quadrature marginal, linear between grid
/// points.
#[derive(Clone, Debug)]
pub struct QuadratureSampler {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl QuadratureSampler {
    pub fn from_table(table: &MarginalTable, theta: f64) -> Result<Self> {
        let xs = table.xs().to_vec();
        let p: Vec<f64> = table.density(theta).into_iter().map(|v| v.max(0.0)).collect();
        Self::from_density(xs, &p)
    }

    /// From density values on a uniform grid.
    pub fn from_density(xs: Vec<f64>, p: &[f64]) -> Result<Self> {
        if xs.len() < 2 || xs.len() != p.len() {
            return Err(Error::Shape(format!("{} grid points, {} density values", xs.len(), p.len())));
        }
        let dx = xs[1] - xs[0];
        let mut cdf = Vec::with_capacity(xs.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in p.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * dx;
            cdf.push(acc);
        }
        if (1.0 - acc).abs() > TAIL_TOLERANCE {
            return Err(Error::GridTooSmall(1.0 - acc));
        }
        for c in cdf.iter_mut() {
            *c /= acc;
        }
        Ok(Self { xs, cdf })
    }

    pub fn draw(&self, rng: &mut Rng) -> f64 {
        let u: f64 = rng.random();
        let k = self.cdf.partition_point(|c| *c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let f = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.xs[k - 1] + f * (self.xs[k] - self.xs[k - 1])
    }

    pub fn draw_n(&self, n: usize, rng: &mut Rng) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

/// `n` i.i.d. values of `X_θ`, deterministic in `seed`.
pub fn sample(rho: &DensityOperator, theta: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::param("sample count", 0.0, "must be at least 1"));
    }
    let axis = QuadratureAxis::for_state(rho, theta, SAMPLER_POINTS)?;
    let table = MarginalTable::new(rho, axis.xs())?;
    let sampler = QuadratureSampler::from_table(&table, theta)?;
    let mut rng = rng::from_seed(seed);
    Ok(sampler.draw_n(n, &mut rng))
}

/// `per_phase` values at every phase in `thetas`, returned phase-major with
/// the matching phase tags. Phase `k` draws from stream `stream + k` of
/// `seed`, and the marginal table is built once.
pub fn sample_at_phases(
    rho: &DensityOperator,
    thetas: &[f64],
    per_phase: usize,
    seed: u64,
    stream: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if per_phase == 0 || thetas.is_empty() {
        return Err(Error::param("sample count", 0.0, "must be at least 1"));
    }
    let axis = QuadratureAxis::for_state(rho, 0.0, SAMPLER_POINTS)?;
    let table = MarginalTable::new(rho, axis.xs())?;
    let mut tags = Vec::with_capacity(thetas.len() * per_phase);
    let mut xs = Vec::with_capacity(thetas.len() * per_phase);
    for (k, &th) in thetas.iter().enumerate() {
        let s = QuadratureSampler::from_table(&table, th)?;
        let mut r = rng::derive(seed, stream + k as u64);
        xs.extend(s.draw_n(per_phase, &mut r));
        tags.extend(std::iter::repeat_n(th, per_phase));
    }
    Ok((tags, xs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdc::squeezed_vacuum;

    // Abramowitz & Stegun 7.1.26, |error| < 1.5e-7
    fn erf(x: f64) -> f64 {
        let s = x.signum();
        let x = x.abs();
        let t = 1.0 / (1.0 + 0.3275911 * x);
        let poly = t * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
        s * (1.0 - poly * (-x * x).exp())
    }

    #[test]
    fn vacuum_variance() {
        let v = DensityOperator::vacuum(4).unwrap();
        let xs = sample(&v, 0.0, 1_000_000, 7).unwrap();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!((var - 0.5).abs() < 0.002, "{var}");
    }

    #[test]
    fn ks_against_gaussian_marginal() {
        let r: f64 = 0.4;
        let rho = squeezed_vacuum(r, 40).unwrap().to_density();
        let theta: f64 = 0.6;
        let v = 0.5 * ((-2.0 * r).exp() * theta.cos().powi(2) + (2.0 * r).exp() * theta.sin().powi(2));
        let n = 20_000;
        let mut xs = sample(&rho, theta, n, 11).unwrap();
        xs.sort_by(f64::total_cmp);
        let cdf = |x: f64| 0.5 * (1.0 + erf(x / (2.0 * v).sqrt()));
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let c = cdf(*x);
                (c - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - c).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value 1.628/√n
        assert!(d < 1.628 / (n as f64).sqrt(), "D = {d}");
    }

    #[test]
    fn multi_phase_sampling() {
        let rho = squeezed_vacuum(0.5, 40).unwrap().to_density();
        let (t, x) = sample_at_phases(&rho, &[0.0, std::f64::consts::FRAC_PI_2], 50_000, 3, 0).unwrap();
        assert_eq!(t.len(), 100_000);
        assert!(t[..50_000].iter().all(|v| *v == 0.0));
        let var = |s: &[f64]| s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64;
        assert!((var(&x[..50_000]) / (0.5 * (-1.0f64).exp()) - 1.0).abs() < 0.03);
        assert!((var(&x[50_000..]) / (0.5 * 1.0f64.exp()) - 1.0).abs() < 0.03);
    }

    #[test]
    fn fixed_seed_repeats() {
        let rho = squeezed_vacuum(0.3, 20).unwrap().to_density();
        assert_eq!(sample(&rho, 0.2, 100, 5).unwrap(), sample(&rho, 0.2, 100, 5).unwrap());
        assert_ne!(sample(&rho, 0.2, 100, 5).unwrap(), sample(&rho, 0.2, 100, 6).unwrap());
        assert!(sample(&rho, 0.2, 0, 5).is_err());
    }
}
