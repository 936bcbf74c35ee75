use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use super::{
    assign_phases, fit_ellipse, fold_phase, generate_summaries, is_phase_symmetric, variance_phase_model, EllipseFit,
    PhaseModel, PhaseSettings, TraceSummary,
};
use crate::error::{Error, Result};
use crate::fock::DensityOperator;
use crate::homodyne::to_db;

/// `V(θ) = V_x cos²θ + V_p sin²θ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureFit {
    pub vx: f64,
    pub vp: f64,
}

/// Fits `V(θ)` to per-trace values (variance estimates or squared
/// quadratures) binned by assigned phase, by least squares reweighted with
/// `count / V(θ)²`, the inverse variance of a bin mean.
pub fn fit_quadrature_curve(thetas: &[f64], values: &[f64], bins: usize) -> Result<QuadratureFit> {
    if thetas.len() != values.len() || bins < 2 {
        return Err(Error::Shape(format!("{} phases, {} values, {bins} bins", thetas.len(), values.len())));
    }
    let w = FRAC_PI_2 / bins as f64;
    let mut cnt = vec![0.0; bins];
    let mut sum = vec![0.0; bins];
    let mut c2 = vec![0.0; bins];
    for (t, v) in thetas.iter().zip(values) {
        let k = ((t / w) as usize).min(bins - 1);
        cnt[k] += 1.0;
        sum[k] += v;
        c2[k] += t.cos().powi(2);
    }
    let used: Vec<usize> = (0..bins).filter(|&k| cnt[k] > 0.0).collect();
    if used.len() < 2 {
        return Err(Error::Degenerate(format!("{} occupied phase bins", used.len())));
    }
    // mean cos² of the members, not of the bin centre
    let c: Vec<f64> = used.iter().map(|&k| c2[k] / cnt[k]).collect();
    let m: Vec<f64> = used.iter().map(|&k| sum[k] / cnt[k]).collect();
    let n: Vec<f64> = used.iter().map(|&k| cnt[k]).collect();
    let overall = sum.iter().sum::<f64>() / cnt.iter().sum::<f64>();
    let mut fit = QuadratureFit {
        vx: overall,
        vp: overall,
    };
    for _ in 0..8 {
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..c.len() {
            let f = (fit.vx * c[i] + fit.vp * (1.0 - c[i])).max(1e-300);
            let wt = n[i] / (f * f);
            let (x, y) = (c[i], 1.0 - c[i]);
            a11 += wt * x * x;
            a12 += wt * x * y;
            a22 += wt * y * y;
            b1 += wt * x * m[i];
            b2 += wt * y * m[i];
        }
        let det = a11 * a22 - a12 * a12;
        if !(det.abs() > 0.0) {
            return Err(Error::Degenerate("phase bins do not separate the two quadratures".into()));
        }
        fit = QuadratureFit {
            vx: (b1 * a22 - b2 * a12) / det,
            vp: (a11 * b2 - a12 * b1) / det,
        };
    }
    Ok(fit)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationEstimate {
    pub iteration: usize,
    pub reference: QuadratureFit,
    pub distilled: QuadratureFit,
    pub flagged: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpreadStats {
    pub iterations: Vec<IterationEstimate>,
    pub reference_mean_vx: f64,
    pub reference_std_vx: f64,
    pub distilled_mean_vx: f64,
    pub distilled_std_vx: f64,
}

fn mean_std(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count() as f64;
    let m = v.clone().sum::<f64>() / n;
    let var = v.map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, var.sqrt())
}

/// Repeats the phase assignment `n_iterations` times and fits the reference
/// and distilled quadrature curves every time. The mean over iterations is
/// the point estimate and the standard deviation its assignment spread.
pub fn assignment_spread(
    traces: &[TraceSummary],
    model: &PhaseModel,
    n_iterations: usize,
    seed: u64,
) -> Result<SpreadStats> {
    if n_iterations < 2 {
        return Err(Error::param("iterations", n_iterations as f64, "must be at least 2"));
    }
    let ref_var: Vec<f64> = traces.iter().map(|t| t.variance()).collect();
    let dist_sq: Vec<f64> = traces.iter().map(|t| t.distilled_value.powi(2)).collect();
    let mut out = Vec::with_capacity(n_iterations);
    for it in 0..n_iterations {
        let a = assign_phases(traces, model, seed, it);
        let th: Vec<f64> = a.iter().map(|x| x.theta).collect();
        out.push(IterationEstimate {
            iteration: it,
            reference: fit_quadrature_curve(&th, &ref_var, model.phase_bins)?,
            distilled: fit_quadrature_curve(&th, &dist_sq, model.phase_bins)?,
            flagged: a.iter().filter(|x| x.flagged).count(),
        });
    }
    let (rm, rs) = mean_std(out.iter().map(|e| e.reference.vx));
    let (dm, ds) = mean_std(out.iter().map(|e| e.distilled.vx));
    Ok(SpreadStats {
        iterations: out,
        reference_mean_vx: rm,
        reference_std_vx: rs,
        distilled_mean_vx: dm,
        distilled_std_vx: ds,
    })
}

/// End-to-end result on synthetic traces, with the hidden truth alongside.
#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    pub n_traces: usize,
    pub pulses_per_trace: usize,
    pub ellipse: EllipseFit,
    pub spread: SpreadStats,
    pub reference_db: f64,
    pub reference_truth_db: f64,
    pub distilled_db: f64,
    pub distilled_std_db: f64,
    pub distilled_truth_db: f64,
    /// RMS of assigned minus true folded phase in the first iteration.
    pub rms_phase_error: f64,
}

/// Generate, fit the ellipse, build the model, assign and collect the spread.
/// Only the truth-free trace summaries reach the estimator.
pub fn run_pipeline(
    initial: &DensityOperator,
    distilled: &DensityOperator,
    settings: &PhaseSettings,
    seed: u64,
) -> Result<PipelineReport> {
    settings.validate()?;
    for (name, rho) in [("initial", initial), ("distilled", distilled)] {
        if !is_phase_symmetric(rho) {
            return Err(Error::Degenerate(format!(
                "{name} state has a complex density matrix; folded phases would bias the result"
            )));
        }
    }
    let (traces, truth) = generate_summaries(
        initial,
        distilled,
        settings.n_traces,
        settings.pulses_per_trace,
        settings.drift,
        seed,
    )?;
    let ellipse = fit_ellipse(&traces, &settings.ellipse, seed)?;
    let model = variance_phase_model(ellipse.vx, ellipse.vp, settings.pulses_per_trace, &settings.model, seed)?;
    let spread = assignment_spread(&traces, &model, settings.iterations, seed)?;

    let first = assign_phases(&traces, &model, seed, 0);
    let sq: f64 = first
        .iter()
        .zip(&truth.phases)
        .map(|(a, t)| (a.theta - fold_phase(*t)).powi(2))
        .sum();
    let rms_phase_error = (sq / first.len() as f64).sqrt();

    let dist_db: Vec<f64> = spread.iterations.iter().map(|e| to_db(e.distilled.vx.max(1e-300))).collect();
    let (_, distilled_std_db) = mean_std(dist_db.iter().copied());
    Ok(PipelineReport {
        n_traces: settings.n_traces,
        pulses_per_trace: settings.pulses_per_trace,
        ellipse,
        reference_db: to_db(spread.reference_mean_vx),
        reference_truth_db: to_db(truth.initial_vx),
        distilled_db: to_db(spread.distilled_mean_vx),
        distilled_std_db,
        distilled_truth_db: to_db(truth.distilled_vx),
        spread,
        rms_phase_error,
    })
}
