use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::PhaseDrift;
use crate::error::{Error, Result};
use crate::fock::DensityOperator;
use crate::homodyne::{self, cumulants_exact, MarginalTable, QuadratureAxis, QuadratureSampler, SAMPLER_POINTS};
use crate::rng::{self, streams, Rng};

/// One synthetic trace with every reference value kept.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub trace_id: u64,
    pub reference_values: Vec<f64>,
    pub distilled_value: f64,
    /// Hidden phase, present for synthetic data only.
    pub true_phase: Option<f64>,
}

/// What the estimator needs from a trace: reference sums and the distilled
/// value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub trace_id: u64,
    pub n_pulses: usize,
    pub sum: f64,
    pub sum_sq: f64,
    pub distilled_value: f64,
}

impl TraceSummary {
    pub fn from_record(r: &TraceRecord) -> Self {
        Self {
            trace_id: r.trace_id,
            n_pulses: r.reference_values.len(),
            sum: r.reference_values.iter().sum(),
            sum_sq: r.reference_values.iter().map(|x| x * x).sum(),
            distilled_value: r.distilled_value,
        }
    }

    /// Mean-subtracted reference variance, normalized by the pulse count.
    pub fn variance(&self) -> f64 {
        let n = self.n_pulses as f64;
        let m = self.sum / n;
        (self.sum_sq / n - m * m).max(0.0)
    }
}

/// Generator-side facts kept apart from the traces handed to the estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub phases: Vec<f64>,
    pub initial_vx: f64,
    pub initial_vp: f64,
    pub distilled_vx: f64,
    pub distilled_vp: f64,
}

enum Reference {
    /// Zero-mean Gaussian state; `Var(X_θ)` from the ladder moments.
    Gaussian(DensityOperator),
    Marginal(MarginalTable),
}

fn is_gaussian(rho: &DensityOperator) -> Result<bool> {
    if homodyne::ladder_moments(rho)?.a.norm() > 1e-12 {
        return Ok(false);
    }
    for th in [0.0, FRAC_PI_4, FRAC_PI_2] {
        let c = cumulants_exact(rho, th)?;
        if c.k3.abs() > 1e-8 || c.k4.abs() > 1e-8 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Deterministic trace source: trace `i` depends only on the seed and `i`.
pub struct TraceGenerator {
    reference: Reference,
    distilled: MarginalTable,
    pulses: usize,
    drift: PhaseDrift,
    seed: u64,
}

impl TraceGenerator {
    pub fn new(
        initial: &DensityOperator,
        distilled: &DensityOperator,
        pulses_per_trace: usize,
        drift: PhaseDrift,
        seed: u64,
    ) -> Result<Self> {
        if pulses_per_trace == 0 {
            return Err(Error::param("pulses_per_trace", 0.0, "must be at least 1"));
        }
        drift.validate()?;
        let reference = if is_gaussian(initial)? {
            Reference::Gaussian(initial.clone())
        } else {
            let axis = QuadratureAxis::for_state(initial, 0.0, SAMPLER_POINTS)?;
            Reference::Marginal(MarginalTable::new(initial, axis.xs())?)
        };
        let axis = QuadratureAxis::for_state(distilled, 0.0, SAMPLER_POINTS)?;
        Ok(Self {
            reference,
            distilled: MarginalTable::new(distilled, axis.xs())?,
            pulses: pulses_per_trace,
            drift,
            seed,
        })
    }

    fn phase(&self, id: u64, rng: &mut Rng) -> f64 {
        match self.drift {
            PhaseDrift::Uniform => rng.random::<f64>() * TAU,
            PhaseDrift::Sinusoid {
                amplitude,
                frequency_hz,
                trace_interval_s,
                offset,
            } => offset + amplitude * (TAU * frequency_hz * id as f64 * trace_interval_s).sin(),
        }
    }

    /// Calls `each` on the reference values of trace `id` in order and
    /// returns `(phase, distilled value)`.
    fn run(&self, id: u64, mut each: impl FnMut(f64)) -> Result<(f64, f64)> {
        let mut rng = rng::derive(self.seed, streams::TRACES + id);
        let phi = self.phase(id, &mut rng);
        let distilled = QuadratureSampler::from_table(&self.distilled, phi)?.draw(&mut rng);
        match &self.reference {
            Reference::Gaussian(rho) => {
                let sd = homodyne::variance(rho, phi)?.sqrt();
                for _ in 0..self.pulses {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    each(sd * z);
                }
            }
            Reference::Marginal(table) => {
                let s = QuadratureSampler::from_table(table, phi)?;
                for _ in 0..self.pulses {
                    each(s.draw(&mut rng));
                }
            }
        }
        Ok((phi, distilled))
    }

    pub fn record(&self, id: u64) -> Result<TraceRecord> {
        let mut values = Vec::with_capacity(self.pulses);
        let (phi, d) = self.run(id, |x| values.push(x))?;
        Ok(TraceRecord {
            trace_id: id,
            reference_values: values,
            distilled_value: d,
            true_phase: Some(phi),
        })
    }

    /// Same draws as [`TraceGenerator::record`], reduced on the fly.
    pub fn summary(&self, id: u64) -> Result<(TraceSummary, f64)> {
        let (mut s, mut s2) = (0.0, 0.0);
        let (phi, d) = self.run(id, |x| {
            s += x;
            s2 += x * x;
        })?;
        Ok((
            TraceSummary {
                trace_id: id,
                n_pulses: self.pulses,
                sum: s,
                sum_sq: s2,
                distilled_value: d,
            },
            phi,
        ))
    }
}

/// Full synthetic traces; memory grows with `n_traces · pulses_per_trace`.
pub fn generate_traces(
    initial: &DensityOperator,
    distilled: &DensityOperator,
    n_traces: usize,
    pulses_per_trace: usize,
    drift: PhaseDrift,
    seed: u64,
) -> Result<Vec<TraceRecord>> {
    let g = TraceGenerator::new(initial, distilled, pulses_per_trace, drift, seed)?;
    (0..n_traces as u64).map(|id| g.record(id)).collect()
}

/// Streaming form of [`generate_traces`]: per-trace summaries for the
/// estimator and the hidden phases in a separate [`GroundTruth`].
pub fn generate_summaries(
    initial: &DensityOperator,
    distilled: &DensityOperator,
    n_traces: usize,
    pulses_per_trace: usize,
    drift: PhaseDrift,
    seed: u64,
) -> Result<(Vec<TraceSummary>, GroundTruth)> {
    let g = TraceGenerator::new(initial, distilled, pulses_per_trace, drift, seed)?;
    let mut out = Vec::with_capacity(n_traces);
    let mut phases = Vec::with_capacity(n_traces);
    for id in 0..n_traces as u64 {
        let (s, phi) = g.summary(id)?;
        out.push(s);
        phases.push(phi);
    }
    let truth = GroundTruth {
        seed,
        phases,
        initial_vx: homodyne::variance(initial, 0.0)?,
        initial_vp: homodyne::variance(initial, FRAC_PI_2)?,
        distilled_vx: homodyne::variance(distilled, 0.0)?,
        distilled_vp: homodyne::variance(distilled, FRAC_PI_2)?,
    };
    Ok((out, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::LossChannel;
    use crate::pdc::{gain_from_squeezing_db, squeezed_vacuum};

    fn lossy(db: f64) -> DensityOperator {
        LossChannel::new(0.428)
            .unwrap()
            .apply(&squeezed_vacuum(gain_from_squeezing_db(db), 60).unwrap().to_density())
            .unwrap()
    }

    #[test]
    fn single_pulse_trace() {
        let s = lossy(6.0);
        let t = generate_traces(&s, &s, 3, 1, PhaseDrift::Uniform, 1).unwrap();
        assert_eq!(t.len(), 3);
        assert!(t.iter().all(|r| r.reference_values.len() == 1));
    }

    #[test]
    fn summaries_match_records() {
        let s = lossy(6.0);
        let g = TraceGenerator::new(&s, &s, 50, PhaseDrift::Uniform, 4).unwrap();
        for id in [0, 7] {
            let rec = g.record(id).unwrap();
            let (sum, phi) = g.summary(id).unwrap();
            assert_eq!(Some(phi), rec.true_phase);
            let want = TraceSummary::from_record(&rec);
            assert_eq!(sum.distilled_value, want.distilled_value);
            assert!((sum.sum - want.sum).abs() < 1e-12 && (sum.sum_sq - want.sum_sq).abs() < 1e-12);
        }
    }

    #[test]
    fn pooled_variance_is_the_phase_average() {
        let s = lossy(6.0);
        let vac = DensityOperator::vacuum(4).unwrap();
        let (sums, truth) = generate_summaries(&s, &vac, 60_000, 10, PhaseDrift::Uniform, 2).unwrap();
        let n: f64 = sums.iter().map(|t| t.n_pulses as f64).sum();
        let pooled = sums.iter().map(|t| t.sum_sq).sum::<f64>() / n;
        // ∫ (V_x cos² + V_p sin²) dθ / 2π
        let want = 0.5 * (truth.initial_vx + truth.initial_vp);
        assert_eq!(truth.distilled_vx, 0.5);
        assert!((pooled / want - 1.0).abs() < 0.005, "{pooled} {want}");
    }

    #[test]
    fn identical_states_give_indistinguishable_pulses() {
        // per-trace standardized distilled values against the reference law
        let s = lossy(6.0);
        let (sums, truth) = generate_summaries(&s, &s, 4000, 2, PhaseDrift::Uniform, 3).unwrap();
        let mut z: Vec<f64> = sums
            .iter()
            .zip(&truth.phases)
            .map(|(t, phi)| t.distilled_value / homodyne::variance(&s, *phi).unwrap().sqrt())
            .collect();
        z.sort_by(f64::total_cmp);
        let n = z.len() as f64;
        let phi = |x: f64| 0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2));
        let d = z
            .iter()
            .enumerate()
            .map(|(i, x)| ((i as f64 + 1.0) / n - phi(*x)).abs().max((phi(*x) - i as f64 / n).abs()))
            .fold(0.0, f64::max);
        // 1% critical value of the one-sample KS statistic
        assert!(d < 1.63 / n.sqrt(), "{d}");
    }

    // Abramowitz & Stegun 7.1.26
    fn erf(x: f64) -> f64 {
        let t = 1.0 / (1.0 + 0.327_591_1 * x.abs());
        let y = 1.0
            - (((((1.061_405_429 * t - 1.453_152_027) * t) + 1.421_413_741) * t - 0.284_496_736) * t + 0.254_829_592)
                * t
                * (-x * x).exp();
        y.copysign(x)
    }

    #[test]
    fn sinusoidal_drift_is_deterministic_in_phase() {
        let s = lossy(6.0);
        let drift = PhaseDrift::Sinusoid {
            amplitude: 2.0,
            frequency_hz: 10.0,
            trace_interval_s: 0.004,
            offset: 1.0,
        };
        let (_, truth) = generate_summaries(&s, &s, 30, 10, drift, 5).unwrap();
        for (i, p) in truth.phases.iter().enumerate() {
            assert!((p - (1.0 + 2.0 * (TAU * 10.0 * i as f64 * 0.004).sin())).abs() < 1e-12);
        }
    }

    #[test]
    fn non_gaussian_references_use_the_marginal() {
        let one = crate::fock::DensityOperator::number(6, 1).unwrap();
        assert!(!is_gaussian(&one).unwrap());
        assert!(is_gaussian(&lossy(3.0)).unwrap());
        let t = generate_traces(&one, &one, 1, 20_000, PhaseDrift::Uniform, 6).unwrap();
        let v = TraceSummary::from_record(&t[0]).variance();
        assert!((v - 1.5).abs() < 0.05, "{v}");
    }
}
