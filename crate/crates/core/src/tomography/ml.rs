use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::BinnedData;
use crate::error::{Error, Result};
use crate::fock::DensityOperator;
use crate::math::hermite_functions;

/// Stopping rule and basis size for [`reconstruct`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlSettings {
    pub cutoff: usize,
    /// Relative log-likelihood change that counts as converged.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MlSettings {
    fn default() -> Self {
        Self {
            cutoff: 14,
            tol: 1e-9,
            max_iter: 5000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionResult {
    pub rho: DensityOperator,
    pub iterations: usize,
    pub log_likelihood: f64,
    pub converged: bool,
    /// Log-likelihood after every accepted step, starting from the initial state.
    pub trace: Vec<f64>,
}

/// Smallest dilution tried before the iteration is declared stationary.
const MIN_DILUTION: f64 = 1e-9;

struct Povm {
    /// Column `i` is `√Δx · |x_θ⟩` for bin `i`, with `⟨m|x_θ⟩ = ψ_m(x) e^{imθ}`.
    v: DMatrix<C64>,
    counts: Vec<f64>,
    total: f64,
}

impl Povm {
    fn new(data: &BinnedData, cutoff: usize) -> Self {
        let nb = data.bins.len();
        let mut v = DMatrix::zeros(cutoff, nb);
        let mut psi = vec![0.0; cutoff];
        let w = data.x_width.sqrt();
        for (i, b) in data.bins.iter().enumerate() {
            hermite_functions(b.x, cutoff, &mut psi);
            for m in 0..cutoff {
                v[(m, i)] = C64::from_polar(w * psi[m], m as f64 * b.theta);
            }
        }
        Self {
            v,
            counts: data.bins.iter().map(|b| b.count as f64).collect(),
            total: data.total as f64,
        }
    }

    fn probabilities(&self, rho: &DMatrix<C64>) -> Vec<f64> {
        let rv = rho * &self.v;
        (0..self.v.ncols())
            .map(|i| self.v.column(i).dotc(&rv.column(i)).re)
            .collect()
    }

    fn log_likelihood(&self, p: &[f64]) -> f64 {
        self.counts
            .iter()
            .zip(p)
            .map(|(n, p)| if *p > 0.0 { n * p.ln() } else { f64::NEG_INFINITY })
            .sum()
    }

    /// `R = Σ_i (f_i / p_i) Π_i`.
    fn r_operator(&self, p: &[f64]) -> DMatrix<C64> {
        let mut weighted = self.v.clone();
        for (i, mut col) in weighted.column_iter_mut().enumerate() {
            col *= C64::new(self.counts[i] / self.total / p[i], 0.0);
        }
        weighted * self.v.adjoint()
    }
}

fn normalized(m: DMatrix<C64>, cutoff: usize) -> Result<DMatrix<C64>> {
    let tr: f64 = (0..cutoff).map(|k| m[(k, k)].re).sum();
    if !(tr > 0.0) {
        return Err(Error::Degenerate("iterate lost its trace".into()));
    }
    Ok(DensityOperator::from_parts(cutoff, 1, m / C64::new(tr, 0.0)).into_matrix())
}

/// Maximum-likelihood state from binned homodyne data by the `RρR` fixed-point
/// iteration, starting from the maximally mixed state.
///
/// Each step first tries the plain update `RρR`; if that lowers the
/// likelihood it falls back to the diluted update `(1+εR)ρ(1+εR)` with
/// halving `ε`, which increases the likelihood for small enough `ε`. The
/// stored trace is therefore non-decreasing. Hitting `max_iter` returns the
/// current iterate with `converged = false`.
pub fn reconstruct(data: &BinnedData, settings: &MlSettings) -> Result<ReconstructionResult> {
    if data.bins.is_empty() || data.total == 0 {
        return Err(Error::Degenerate("no binned samples".into()));
    }
    let d = settings.cutoff;
    if d < 2 {
        return Err(Error::param("reconstruction cutoff", d as f64, "must be at least 2"));
    }
    let povm = Povm::new(data, d);
    let mut rho = DensityOperator::maximally_mixed(d)?.into_matrix();
    let mut p = povm.probabilities(&rho);
    let mut ll = povm.log_likelihood(&p);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    let id = DMatrix::<C64>::identity(d, d);

    while iterations < settings.max_iter {
        let r = povm.r_operator(&p);
        let mut eps = f64::INFINITY;
        let mut accepted = None;
        while eps >= MIN_DILUTION {
            let cand = if eps.is_infinite() {
                &r * &rho * &r
            } else {
                let g = &id + &r * C64::new(eps, 0.0);
                &g * &rho * &g
            };
            let cand = normalized(cand, d)?;
            let cp = povm.probabilities(&cand);
            let cl = povm.log_likelihood(&cp);
            if cl >= ll {
                accepted = Some((cand, cp, cl));
                break;
            }
            eps = if eps.is_infinite() { 1.0 } else { eps * 0.5 };
        }
        let Some((cand, cp, cl)) = accepted else {
            // no ascent direction left at rounding level
            converged = true;
            break;
        };
        iterations += 1;
        let change = (cl - ll).abs() / ll.abs().max(f64::MIN_POSITIVE);
        if cl < *trace.last().unwrap() {
            return Err(Error::Degenerate(format!("log-likelihood decreased at iteration {iterations}")));
        }
        rho = cand;
        p = cp;
        ll = cl;
        trace.push(ll);
        if change < settings.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("maximum-likelihood iteration stopped at max_iter = {}", settings.max_iter);
    }
    let rho = DensityOperator::from_parts(d, 1, rho);
    Ok(ReconstructionResult {
        rho,
        iterations,
        log_likelihood: ll,
        converged,
        trace,
    })
}
