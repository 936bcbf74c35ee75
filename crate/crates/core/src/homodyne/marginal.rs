use num_complex::Complex64 as C64;

use super::QuadratureAxis;
use crate::error::{Error, Result};
use crate::fock::DensityOperator;
use crate::math::hermite_table;

/// Allowed deviation of the integrated marginal from 1.
pub const TAIL_TOLERANCE: f64 = 1e-6;

/// Phase harmonics of a state's quadrature marginals on a fixed grid:
/// `p_θ(x) = Σ_Δ Re(f_Δ(x) e^{−iΔθ})`, with
/// `f_0 = Σ ρ_nn ψ_n²` and `f_Δ = 2 Σ ρ_{n+Δ,n} ψ_{n+Δ} ψ_n`.
///
/// Building the table costs `O(N² · grid)`; each phase after that costs
/// `O(N · grid)`.
#[derive(Clone, Debug)]
pub struct MarginalTable {
    xs: Vec<f64>,
    /// `(Δ, f_Δ)` for the harmonics that are not identically zero.
    harmonics: Vec<(usize, Vec<C64>)>,
}

impl MarginalTable {
    pub fn new(rho: &DensityOperator, xs: &[f64]) -> Result<Self> {
        rho.require_modes(1)?;
        let n = rho.cutoff();
        let psi = hermite_table(xs, n);
        let tr = rho.trace();
        let mut harmonics = Vec::new();
        for d in 0..n {
            let mut f = vec![C64::new(0.0, 0.0); xs.len()];
            let mut any = false;
            let scale = if d == 0 { 1.0 } else { 2.0 } / tr;
            for k in 0..n - d {
                let r = rho.entry(k + d, k) * scale;
                if r.norm() < 1e-18 {
                    continue;
                }
                any = true;
                for (j, row) in psi.iter().enumerate() {
                    f[j] += r * (row[k + d] * row[k]);
                }
            }
            if any {
                harmonics.push((d, f));
            }
        }
        Ok(Self {
            xs: xs.to_vec(),
            harmonics,
        })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Density values `p_θ(x_j)`.
    pub fn density(&self, theta: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.xs.len()];
        for (d, f) in &self.harmonics {
            let e = C64::from_polar(1.0, -(*d as f64) * theta);
            for (o, v) in out.iter_mut().zip(f) {
                *o += (v * e).re;
            }
        }
        out
    }
}

/// Marginal density of `X_θ` on the axis grid. Errors when the grid misses
/// more than 1e-6 of the probability.
pub fn marginal(rho: &DensityOperator, axis: &QuadratureAxis) -> Result<Vec<f64>> {
    let table = MarginalTable::new(rho, axis.xs())?;
    let p = table.density(axis.theta);
    let mass: f64 = p.iter().sum::<f64>() * axis.spacing();
    if (1.0 - mass).abs() > TAIL_TOLERANCE {
        return Err(Error::GridTooSmall(1.0 - mass));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{FockVector, LossChannel};
    use crate::homodyne::variance;
    use crate::pdc::squeezed_vacuum;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn vacuum_is_gaussian() {
        let v = DensityOperator::vacuum(6).unwrap();
        for th in [0.0, 1.0, 2.5] {
            let ax = QuadratureAxis::new(th, 8.0, 801).unwrap();
            let p = marginal(&v, &ax).unwrap();
            for (x, px) in ax.xs().iter().zip(&p) {
                assert!((px - (-x * x).exp() / PI.sqrt()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_photon_density() {
        let one = FockVector::number_state(4, 1).unwrap().to_density();
        let ax = QuadratureAxis::new(0.3, 8.0, 801).unwrap();
        let p = marginal(&one, &ax).unwrap();
        for (x, px) in ax.xs().iter().zip(&p) {
            assert!((px - 2.0 * x * x * (-x * x).exp() / PI.sqrt()).abs() < 1e-14);
        }
        assert_eq!(p[400], 0.0);
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let rho = squeezed_vacuum(0.3, 30).unwrap().to_density();
        let ax = QuadratureAxis::new(std::f64::consts::FRAC_PI_2, 1.0, 101).unwrap();
        assert!(matches!(marginal(&rho, &ax), Err(Error::GridTooSmall(_))));
    }

    #[test]
    fn variance_from_marginal_matches_operator_side() {
        let rho = LossChannel::new(0.6)
            .unwrap()
            .apply(&squeezed_vacuum(0.5, 40).unwrap().to_density())
            .unwrap()
            .rotated(0.4)
            .unwrap();
        for th in [0.0, 0.8, 2.0] {
            let ax = QuadratureAxis::with_spacing(&rho, th, 10.0, 0.01).unwrap();
            let p = marginal(&rho, &ax).unwrap();
            let dx = ax.spacing();
            let m: f64 = ax.xs().iter().zip(&p).map(|(x, p)| x * p).sum::<f64>() * dx;
            let m2: f64 = ax.xs().iter().zip(&p).map(|(x, p)| x * x * p).sum::<f64>() * dx;
            assert!((m2 - m * m - variance(&rho, th).unwrap()).abs() < 1e-7);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn half_turn_mirrors(r in 0.0f64..0.8, phi in 0.0f64..PI, th in 0.0f64..PI) {
            let sq = squeezed_vacuum(r, 40).unwrap();
            let mixed = DensityOperator::mix(&[
                (0.7, &sq.to_density()),
                (0.3, &FockVector::number_state(40, 1).unwrap().to_density()),
            ]).unwrap().rotated(phi).unwrap();
            let xs: Vec<f64> = (0..801).map(|j| -8.0 + 0.02 * j as f64).collect();
            let t = MarginalTable::new(&mixed, &xs).unwrap();
            let a = t.density(th);
            let b = t.density(th + PI);
            for j in 0..xs.len() {
                prop_assert!((a[j] - b[xs.len() - 1 - j]).abs() < 1e-8);
            }
        }
    }
}
