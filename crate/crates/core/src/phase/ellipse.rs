use std::f64::consts::FRAC_PI_2;

use rand::Rng as _;
use rand_distr::{ChiSquared, Distribution};
use serde::{Deserialize, Serialize};

use super::TraceSummary;
use crate::error::{Error, Result};
use crate::rng::{self, streams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EllipseSettings {
    /// Simulated traces per candidate ellipse.
    pub n_mc: usize,
    /// Histogram bins between the smallest and largest observed variance.
    pub bins: usize,
    /// Candidates per axis in each round of the grid search.
    pub grid: usize,
    pub rounds: usize,
}

impl Default for EllipseSettings {
    fn default() -> Self {
        Self {
            n_mc: 100_000,
            bins: 100,
            grid: 21,
            rounds: 5,
        }
    }
}

impl EllipseSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_mc < 1000 {
            return Err(Error::Config(format!("ellipse n_mc must be at least 1000, got {}", self.n_mc)));
        }
        if self.bins < 5 {
            return Err(Error::Config(format!("ellipse bins must be at least 5, got {}", self.bins)));
        }
        if self.grid < 3 || self.rounds == 0 {
            return Err(Error::Config("ellipse grid needs at least 3 points and 1 round".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EllipseFit {
    pub vx: f64,
    pub vp: f64,
    /// Binned L2 distance at the optimum.
    pub distance: f64,
}

struct Histogram {
    lo: f64,
    width: f64,
    bins: usize,
}

impl Histogram {
    /// Fractions per bin plus one underflow and one overflow cell.
    fn fractions(&self, values: impl Iterator<Item = f64>, n: usize) -> Vec<f64> {
        let mut h = vec![0.0; self.bins + 2];
        for v in values {
            let k = ((v - self.lo) / self.width).floor();
            let idx = if k < 0.0 {
                0
            } else if k as usize >= self.bins {
                // the largest observation sits on the upper edge
                if (v - self.lo - self.width * self.bins as f64).abs() <= 1e-12 * self.width {
                    self.bins
                } else {
                    self.bins + 1
                }
            } else {
                k as usize + 1
            };
            h[idx] += 1.0;
        }
        h.iter_mut().for_each(|x| *x /= n as f64);
        h
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

/// Ellipse `(V_x, V_p)` whose simulated distribution of per-trace reference
/// variances under a uniform phase best matches the observed one.
///
/// The estimator law is `V(φ) χ²_{n−1} / n` for Gaussian references. All
/// candidates share one set of random phases and χ² factors, so the distance
/// surface is free of Monte Carlo jitter between neighbouring candidates. The
/// search is a grid around the 1% and 99% variance quantiles, shrunk by a
/// factor of 4 around the best point in every round.
pub fn fit_ellipse(traces: &[TraceSummary], settings: &EllipseSettings, seed: u64) -> Result<EllipseFit> {
    settings.validate()?;
    if traces.len() < 100 {
        return Err(Error::Degenerate(format!("{} traces, need at least 100", traces.len())));
    }
    let n = traces[0].n_pulses;
    if n < 2 || traces.iter().any(|t| t.n_pulses != n) {
        return Err(Error::Degenerate("traces need one common pulse count of at least 2".into()));
    }
    let mut v: Vec<f64> = traces.iter().map(|t| t.variance()).collect();
    v.sort_by(f64::total_cmp);
    let (lo, hi) = (v[0], v[v.len() - 1]);
    if !(hi > lo) {
        return Err(Error::Degenerate(format!("all trace variances equal {lo}")));
    }
    let hist = Histogram {
        lo,
        width: (hi - lo) / settings.bins as f64,
        bins: settings.bins,
    };
    let emp = hist.fractions(v.iter().copied(), v.len());

    let mut r = rng::derive(seed, streams::ELLIPSE);
    let chi = ChiSquared::new((n - 1) as f64).map_err(|e| Error::Degenerate(e.to_string()))?;
    let draws: Vec<(f64, f64)> = (0..settings.n_mc)
        .map(|_| {
            let c = (r.random::<f64>() * FRAC_PI_2).cos().powi(2);
            (c, chi.sample(&mut r) / n as f64)
        })
        .collect();
    let distance = |vx: f64, vp: f64| -> f64 {
        let sim = hist.fractions(draws.iter().map(|(c, k)| k * (vx * c + vp * (1.0 - c))), draws.len());
        sim.iter().zip(&emp).map(|(a, b)| (a - b).powi(2)).sum()
    };

    let (mut cx, mut cp) = (quantile(&v, 0.01), quantile(&v, 0.99));
    let (mut sx, mut sp) = (0.15 * cx, 0.15 * cp);
    let mut best = (cx, cp, f64::INFINITY);
    let g = settings.grid;
    for _ in 0..settings.rounds {
        for i in 0..g {
            let vx = cx - sx + 2.0 * sx * i as f64 / (g - 1) as f64;
            for j in 0..g {
                let vp = cp - sp + 2.0 * sp * j as f64 / (g - 1) as f64;
                if vx <= 0.0 || vx > vp {
                    continue;
                }
                let d = distance(vx, vp);
                if d < best.2 {
                    best = (vx, vp, d);
                }
            }
        }
        cx = best.0;
        cp = best.1;
        sx *= 0.25;
        sp *= 0.25;
    }
    log::debug!("ellipse fit V_x = {:.5}, V_p = {:.5}, distance {:.3e}", best.0, best.1, best.2);
    Ok(EllipseFit {
        vx: best.0,
        vp: best.1,
        distance: best.2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{DensityOperator, LossChannel};
    use crate::phase::{generate_summaries, PhaseDrift};
    use crate::pdc::{gain_from_squeezing_db, squeezed_vacuum};

    fn traces(rho: &DensityOperator, n: usize, seed: u64) -> Vec<TraceSummary> {
        generate_summaries(rho, rho, n, 8000, PhaseDrift::Uniform, seed).unwrap().0
    }

    #[test]
    fn recovers_a_known_ellipse() {
        let rho = LossChannel::new(0.428)
            .unwrap()
            .apply(&squeezed_vacuum(gain_from_squeezing_db(6.0), 60).unwrap().to_density())
            .unwrap();
        let vx = crate::homodyne::variance(&rho, 0.0).unwrap();
        let vp = crate::homodyne::variance(&rho, FRAC_PI_2).unwrap();
        let t = traces(&rho, 3000, 1);
        let fit = fit_ellipse(&t, &EllipseSettings::default(), 2).unwrap();
        assert!((fit.vx / vx - 1.0).abs() < 0.03, "{fit:?} vs {vx}");
        assert!((fit.vp / vp - 1.0).abs() < 0.03, "{fit:?} vs {vp}");

        let mut rev = t.clone();
        rev.reverse();
        assert_eq!(fit_ellipse(&rev, &EllipseSettings::default(), 2).unwrap(), fit);
    }

    #[test]
    fn thermal_light_has_a_round_ellipse() {
        let th = DensityOperator::thermal(40, 0.3).unwrap();
        let fit = fit_ellipse(&traces(&th, 1000, 3), &EllipseSettings::default(), 4).unwrap();
        assert!((fit.vx / fit.vp - 1.0).abs() < 0.02, "{fit:?}");
        assert!((fit.vx / 0.8 - 1.0).abs() < 0.02, "{fit:?}");
    }

    #[test]
    fn degenerate_inputs() {
        let same = vec![
            TraceSummary {
                trace_id: 0,
                n_pulses: 4,
                sum: 0.0,
                sum_sq: 2.0,
                distilled_value: 0.0,
            };
            200
        ];
        assert!(fit_ellipse(&same, &EllipseSettings::default(), 0).is_err());
        assert!(fit_ellipse(&same[..50], &EllipseSettings::default(), 0).is_err());
    }
}
