use std::f64::consts::FRAC_PI_2;

use rand::Rng as _;
use rand_distr::{ChiSquared, Distribution};
use serde::{Deserialize, Serialize};

use super::TraceSummary;
use crate::error::{Error, Result};
use crate::rng::{self, streams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSettings {
    /// Bins over `[0, π/2]`; 90 gives 1° steps.
    pub phase_bins: usize,
    pub variance_bins: usize,
    pub n_mc: usize,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            phase_bins: 90,
            variance_bins: 200,
            n_mc: 200_000,
        }
    }
}

impl ModelSettings {
    pub fn validate(&self) -> Result<()> {
        if self.phase_bins == 0 || self.variance_bins == 0 {
            return Err(Error::Config("phase_bins and variance_bins must be at least 1".into()));
        }
        // on average at least one simulated trace per table cell
        if self.n_mc < self.phase_bins * self.variance_bins {
            return Err(Error::Config(format!(
                "model n_mc = {} is below phase_bins · variance_bins = {}",
                self.n_mc,
                self.phase_bins * self.variance_bins
            )));
        }
        Ok(())
    }
}

/// Monte Carlo joint table of phase and per-trace variance estimate under a
/// uniform phase prior. Column `j` of the table, normalized, is the phase
/// posterior given a variance in bin `j`.
#[derive(Clone, Debug, Serialize)]
pub struct PhaseModel {
    pub vx: f64,
    pub vp: f64,
    pub pulses_per_trace: usize,
    pub phase_bins: usize,
    pub variance_bins: usize,
    pub v_lo: f64,
    pub v_hi: f64,
    /// Cumulative counts over phase bins, one run of `phase_bins` per
    /// variance bin.
    cumulative: Vec<u32>,
    /// Mean simulated variance in every phase bin.
    pub mean_by_phase: Vec<f64>,
}

impl PhaseModel {
    pub fn phase_width(&self) -> f64 {
        FRAC_PI_2 / self.phase_bins as f64
    }

    pub fn phase_center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.phase_width()
    }

    fn column(&self, j: usize) -> &[u32] {
        &self.cumulative[j * self.phase_bins..(j + 1) * self.phase_bins]
    }

    fn count(&self, j: usize) -> u32 {
        self.column(j)[self.phase_bins - 1]
    }

    /// Variance bin of `v`, moved to the nearest populated bin when needed;
    /// the flag marks such moves.
    pub fn variance_bin(&self, v: f64) -> (usize, bool) {
        let w = (self.v_hi - self.v_lo) / self.variance_bins as f64;
        let raw = ((v - self.v_lo) / w).floor();
        let mut flagged = !(0.0..self.variance_bins as f64).contains(&raw);
        let j = raw.clamp(0.0, (self.variance_bins - 1) as f64) as usize;
        if self.count(j) > 0 {
            return (j, flagged);
        }
        flagged = true;
        for off in 1..self.variance_bins {
            if j >= off && self.count(j - off) > 0 {
                return (j - off, flagged);
            }
            if j + off < self.variance_bins && self.count(j + off) > 0 {
                return (j + off, flagged);
            }
        }
        unreachable!("model table has simulated traces")
    }

    /// Normalized phase posterior for variance bin `j`.
    pub fn posterior(&self, j: usize) -> Vec<f64> {
        let c = self.column(j);
        let total = c[self.phase_bins - 1] as f64;
        (0..self.phase_bins)
            .map(|k| (c[k] - if k == 0 { 0 } else { c[k - 1] }) as f64 / total.max(1.0))
            .collect()
    }

    /// Phase draw for a trace variance, uniform inside the chosen phase bin.
    pub fn draw_phase(&self, v: f64, rng: &mut rng::Rng) -> (f64, bool) {
        let (j, flagged) = self.variance_bin(v);
        let c = self.column(j);
        let u = rng.random::<f64>() * c[self.phase_bins - 1] as f64;
        let k = c.partition_point(|x| (*x as f64) <= u).min(self.phase_bins - 1);
        let theta = (k as f64 + rng.random::<f64>()) * self.phase_width();
        (theta.min(FRAC_PI_2), flagged)
    }
}

/// Simulates `n_mc` traces with uniform phases on `[0, π/2]` and estimator
/// `V(φ) χ²_{n−1} / n`, `V(φ) = V_x cos²φ + V_p sin²φ`, and tabulates them.
/// The variance axis spans `V_x(1 − 6s)` to `V_p(1 + 6s)` with
/// `s = √(2/n)`, the relative estimator spread.
pub fn variance_phase_model(
    vx: f64,
    vp: f64,
    pulses_per_trace: usize,
    settings: &ModelSettings,
    seed: u64,
) -> Result<PhaseModel> {
    settings.validate()?;
    if !(vx > 0.0 && vx <= vp) {
        return Err(Error::Degenerate(format!("ellipse needs 0 < V_x ≤ V_p, got {vx}, {vp}")));
    }
    if pulses_per_trace < 2 {
        return Err(Error::param("pulses_per_trace", pulses_per_trace as f64, "must be at least 2"));
    }
    let n = pulses_per_trace as f64;
    let s = (2.0 / n).sqrt();
    let v_lo = (vx * (1.0 - 6.0 * s)).max(0.0);
    let v_hi = vp * (1.0 + 6.0 * s);
    let (np, nv) = (settings.phase_bins, settings.variance_bins);
    let mut counts = vec![0u32; np * nv];
    let mut sums = vec![0.0; np];
    let mut per_phase = vec![0u32; np];
    let chi = ChiSquared::new(n - 1.0).map_err(|e| Error::Degenerate(e.to_string()))?;
    let mut r = rng::derive(seed, streams::MODEL);
    let pw = FRAC_PI_2 / np as f64;
    let vw = (v_hi - v_lo) / nv as f64;
    for _ in 0..settings.n_mc {
        let phi = r.random::<f64>() * FRAC_PI_2;
        let v = (vx * phi.cos().powi(2) + vp * phi.sin().powi(2)) * chi.sample(&mut r) / n;
        let k = ((phi / pw) as usize).min(np - 1);
        let j = ((v - v_lo) / vw).floor().clamp(0.0, (nv - 1) as f64) as usize;
        counts[j * np + k] += 1;
        sums[k] += v;
        per_phase[k] += 1;
    }
    for j in 0..nv {
        for k in 1..np {
            counts[j * np + k] += counts[j * np + k - 1];
        }
    }
    let mean_by_phase = sums.iter().zip(&per_phase).map(|(s, c)| s / (*c).max(1) as f64).collect();
    Ok(PhaseModel {
        vx,
        vp,
        pulses_per_trace,
        phase_bins: np,
        variance_bins: nv,
        v_lo,
        v_hi,
        cumulative: counts,
        mean_by_phase,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseAssignment {
    pub trace_id: u64,
    /// Folded phase in `[0, π/2]`.
    pub theta: f64,
    pub reference_variance: f64,
    pub iteration: usize,
    /// Variance fell outside the populated model support.
    pub flagged: bool,
}

/// One phase per trace drawn from the posterior of its reference variance.
/// Iteration `i` of a seed always yields the same assignment.
pub fn assign_phases(traces: &[TraceSummary], model: &PhaseModel, seed: u64, iteration: usize) -> Vec<PhaseAssignment> {
    let mut r = rng::derive(seed, streams::ASSIGN + iteration as u64);
    let mut flagged = 0usize;
    let out: Vec<PhaseAssignment> = traces
        .iter()
        .map(|t| {
            let v = t.variance();
            let (theta, f) = model.draw_phase(v, &mut r);
            flagged += f as usize;
            PhaseAssignment {
                trace_id: t.trace_id,
                theta,
                reference_variance: v,
                iteration,
                flagged: f,
            }
        })
        .collect();
    if flagged > 0 {
        log::info!("{flagged} of {} trace variances fell outside the model support", traces.len());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(vx: f64, vp: f64) -> PhaseModel {
        variance_phase_model(vx, vp, 8000, &ModelSettings::default(), 1).unwrap()
    }

    fn summary(id: u64, v: f64) -> TraceSummary {
        TraceSummary {
            trace_id: id,
            n_pulses: 8000,
            sum: 0.0,
            sum_sq: 8000.0 * v,
            distilled_value: 0.0,
        }
    }

    #[test]
    fn phase_averages_follow_the_rotation_formula() {
        let m = model(0.34, 1.09);
        let n_phase: f64 = 200_000.0 / 90.0;
        for k in [0, 30, 60, 89] {
            let phi = m.phase_center(k);
            let v = 0.34 * phi.cos().powi(2) + 1.09 * phi.sin().powi(2);
            // bin-average of the rotation curve plus estimator noise
            let tol = 5.0 * v * (2.0f64 / 8000.0).sqrt() / n_phase.sqrt() + 1.09 * (m.phase_width()).powi(2);
            assert!((m.mean_by_phase[k] - v).abs() < tol, "k={k} {} {v}", m.mean_by_phase[k]);
        }
        assert!((m.mean_by_phase[0] / 0.34 - 1.0).abs() < 0.01);
    }

    #[test]
    fn round_ellipse_carries_no_phase_information() {
        let m = model(0.8, 0.8);
        let (j, _) = m.variance_bin(0.8);
        let p = m.posterior(j);
        let expect = 1.0 / 90.0;
        let n = m.count(j) as f64;
        for q in p {
            assert!((q - expect).abs() < 5.0 * (expect / n).sqrt(), "{q}");
        }
    }

    #[test]
    fn squeezed_variance_points_at_zero_phase() {
        let m = model(0.34, 1.09);
        let t: Vec<TraceSummary> = (0..2000).map(|i| summary(i, 0.34)).collect();
        let a = assign_phases(&t, &m, 2, 0);
        let mean = a.iter().map(|x| x.theta).sum::<f64>() / a.len() as f64;
        assert!(mean < 0.2, "{mean}");
        assert!(a.iter().all(|x| (0.0..=FRAC_PI_2).contains(&x.theta)));
    }

    #[test]
    fn out_of_support_is_flagged() {
        let m = model(0.34, 1.09);
        let a = assign_phases(&[summary(0, 5.0), summary(1, 0.7)], &m, 3, 0);
        assert!(a[0].flagged && !a[1].flagged);
        assert!(a[0].theta > 1.3);
    }

    #[test]
    fn assignment_is_reproducible() {
        let m = model(0.34, 1.09);
        let t: Vec<TraceSummary> = (0..100).map(|i| summary(i, 0.3 + 0.008 * i as f64)).collect();
        assert_eq!(assign_phases(&t, &m, 9, 4), assign_phases(&t, &m, 9, 4));
        assert_ne!(assign_phases(&t, &m, 9, 4), assign_phases(&t, &m, 9, 5));
    }

    #[test]
    fn table_resolution_is_checked() {
        let s = ModelSettings {
            n_mc: 100,
            ..ModelSettings::default()
        };
        assert!(variance_phase_model(0.3, 1.0, 8000, &s, 0).is_err());
        assert!(variance_phase_model(1.0, 0.3, 8000, &ModelSettings::default(), 0).is_err());
    }
}
