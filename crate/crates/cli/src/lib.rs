//! Commands behind the `distill` binary. Each command reads a validated
//! [`RunConfig`], writes its tables into an output directory and returns the
//! numbers it wrote, so tests can check them without parsing files.
//!
//! All randomness comes from `simulation.seed` through fixed stream ids, so a
//! rerun with the same config produces byte-identical files.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use distill_core::config::SweepParameter;
use distill_core::distillation::{detected_mixture, undistilled_state};
use distill_core::fock::{fidelity, purity};
use distill_core::homodyne::{
    cumulant_errors, cumulants, cumulants_exact_curve, sample_at_phases, variance_db,
};
use distill_core::pdc::{
    gain_from_squeezing_db, schmidt_from_mode_number, CharacterizedSource, ExplicitSource, SchmidtSpectrum, SourceSpec,
};
use distill_core::phase::{run_pipeline, PipelineReport};
use distill_core::rng::{self, streams};
use distill_core::config::TomographyConfig;
use distill_core::tomography::{bin, reconstruct, wigner, write_wigner_csv, ReconstructionResult};
use distill_core::{DensityOperator, Error, LossChannel, RunConfig};
use rand::Rng as _;
use serde::Serialize;

/// Batches used for the standard errors of sampled cumulants.
const CUMULANT_BATCHES: usize = 20;

/// Failure of a command, split by the stage that failed.
#[derive(Debug)]
pub enum CliError {
    /// The config could not be read, parsed or validated.
    Config(Error),
    Run(Error),
}

impl CliError {
    /// 2 for config errors, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(e) if e.is_numerical() => 3,
            CliError::Run(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e @ Error::Config(_)) => write!(f, "{e}"),
            CliError::Config(e) => write!(f, "config: {e}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(Error::Io(e))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Run(Error::Csv(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Run(Error::Json(e))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Command line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub cutoff: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Reads the config (or the built-in operating point without a path),
/// applies the overrides and validates the result.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> CliResult<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p).map_err(CliError::Config)?,
        None => RunConfig::default(),
    };
    if let Some(s) = overrides.seed {
        cfg.simulation.seed = s;
    }
    if let Some(c) = overrides.cutoff {
        cfg.simulation.cutoff = c;
    }
    if let Some(o) = &overrides.out {
        cfg.outputs.dir = o.to_string_lossy().into_owned();
    }
    cfg.validate().map_err(CliError::Config)?;
    let b = &cfg.budget;
    log::info!(
        "budget: factor product {:.4}, total in use {:.4}",
        b.product(),
        b.total_override.unwrap_or(b.product())
    );
    Ok(cfg)
}

/// Undistilled, distilled and mixture states of one config, all at the
/// detected cutoff `2N − 1`.
#[derive(Clone, Debug)]
pub struct States {
    pub initial: DensityOperator,
    /// The fully heralded pattern alone, after the same loss as the mixture.
    pub distilled: DensityOperator,
    /// The detected mixture over all heralding patterns.
    pub mixture: DensityOperator,
    pub alpha: Option<[f64; 3]>,
}

pub fn simulate_states(cfg: &RunConfig) -> CliResult<States> {
    let spec = cfg.spectrum().map_err(CliError::Config)?;
    states_for(&spec, cfg)
}

fn states_for(spec: &SchmidtSpectrum, cfg: &RunConfig) -> CliResult<States> {
    let n = cfg.simulation.cutoff;
    if spec.gain() == 0.0 {
        // nothing to herald; every stage sees the vacuum
        log::warn!("gain is zero, all states are the vacuum");
        let vac = DensityOperator::vacuum(2 * n - 1)?;
        return Ok(States {
            initial: vac.clone(),
            distilled: vac.clone(),
            mixture: vac,
            alpha: None,
        });
    }
    let initial = undistilled_state(spec, &cfg.budget, n)?;
    let m = detected_mixture(spec, &cfg.tap, &cfg.budget, n)?;
    let [s, i] = cfg.tap.subtract;
    let top = m
        .branch(s, i)
        .ok_or_else(|| Error::Degenerate(format!("pattern {:?} has zero weight", cfg.tap.subtract)))?;
    let distilled = LossChannel::new(m.efficiency)?.apply(&top.state)?;
    Ok(States {
        initial,
        distilled,
        mixture: m.state,
        alpha: m.weights.map(|w| w.alpha),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateSummary {
    pub state: String,
    pub var_x_db: f64,
    pub var_p_db: f64,
    pub purity: f64,
    pub mean_photons: f64,
}

impl StateSummary {
    pub fn of(name: &str, rho: &DensityOperator) -> CliResult<Self> {
        Ok(Self {
            state: name.into(),
            var_x_db: variance_db(rho, 0.0)?,
            var_p_db: variance_db(rho, FRAC_PI_2)?,
            purity: purity(rho)?,
            mean_photons: rho.mean_photons(),
        })
    }
}

#[derive(Serialize)]
struct StateFile<'a> {
    summary: &'a StateSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    mixture_weights: Option<[f64; 3]>,
    density: &'a DensityOperator,
}

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    log::info!("writing {}", path.display());
    Ok(BufWriter::new(File::create(path)?))
}

fn csv_writer(dir: &Path, name: &str) -> CliResult<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(dir, name)?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// `initial.json`, `distilled.json`, `mixture.json` (summary and density
/// matrix) and `states.csv`.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> CliResult<Vec<StateSummary>> {
    let st = simulate_states(cfg)?;
    let mut rows = Vec::new();
    for (name, rho, alpha) in [
        ("initial", &st.initial, None),
        ("distilled", &st.distilled, None),
        ("mixture", &st.mixture, st.alpha),
    ] {
        let summary = StateSummary::of(name, rho)?;
        write_json(
            out,
            &format!("{name}.json"),
            &StateFile {
                summary: &summary,
                mixture_weights: alpha,
                density: rho,
            },
        )?;
        rows.push(summary);
    }
    let mut w = csv_writer(out, "states.csv")?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(rows)
}

/// Homodyne tomography of `rho`: `samples` values spread evenly over
/// `phases` uniformly random phases, binned and reconstructed.
/// `stream` separates the random numbers of different states.
pub fn tomograph(rho: &DensityOperator, t: &TomographyConfig, seed: u64, stream: u64) -> CliResult<ReconstructionResult> {
    let base = streams::TOMOGRAPHY + (stream << 32);
    let mut r = rng::derive(seed, base);
    let thetas: Vec<f64> = (0..t.phases).map(|_| r.random::<f64>() * TAU).collect();
    let (tags, xs) = sample_at_phases(rho, &thetas, t.samples / t.phases, seed, base + 1)?;
    let data = bin(&tags, &xs, &t.bins)?;
    Ok(reconstruct(&data, &t.ml)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1Row {
    pub state: String,
    pub sim_var_x_db: f64,
    pub sim_var_p_db: f64,
    pub sim_purity: f64,
    pub rec_var_x_db: f64,
    pub rec_var_p_db: f64,
    pub rec_purity: f64,
    pub fidelity: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Generated against reconstructed statistics for the undistilled state and
/// the detected mixture, in `table1.csv`. Fails with a numerical error after
/// writing when a reconstruction did not converge.
pub fn cmd_table1(cfg: &RunConfig, out: &Path) -> CliResult<Vec<Table1Row>> {
    let st = simulate_states(cfg)?;
    let seed = cfg.simulation.seed;
    let mut rows = Vec::new();
    for (k, (name, rho)) in [("undistilled", &st.initial), ("distilled", &st.mixture)].into_iter().enumerate() {
        let sim = StateSummary::of(name, rho)?;
        let rec = tomograph(rho, &cfg.simulation.tomography, seed, k as u64)?;
        let padded = rec.rho.with_cutoff(rho.cutoff())?;
        rows.push(Table1Row {
            state: name.into(),
            sim_var_x_db: sim.var_x_db,
            sim_var_p_db: sim.var_p_db,
            sim_purity: sim.purity,
            rec_var_x_db: variance_db(&rec.rho, 0.0)?,
            rec_var_p_db: variance_db(&rec.rho, FRAC_PI_2)?,
            rec_purity: purity(&rec.rho)?,
            fidelity: fidelity(rho, &padded)?,
            iterations: rec.iterations,
            converged: rec.converged,
        });
    }
    let mut w = csv_writer(out, "table1.csv")?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    if let Some(r) = rows.iter().find(|r| !r.converged) {
        return Err(CliError::Run(Error::Degenerate(format!(
            "reconstruction of the {} state stopped after {} iterations without converging",
            r.state, r.iterations
        ))));
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CumulantRow {
    pub state: String,
    pub kind: String,
    pub theta_deg: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k1_err: Option<f64>,
    pub k2_err: Option<f64>,
    pub k3_err: Option<f64>,
    pub k4_err: Option<f64>,
    pub n_samples: Option<usize>,
}

/// Sampled and exact `κ₁..κ₄` against the quadrature phase for the
/// undistilled state and the mixture, in `cumulants.csv`. Sampled rows carry
/// batch-means standard errors.
pub fn cmd_cumulants(cfg: &RunConfig, out: &Path) -> CliResult<Vec<CumulantRow>> {
    let st = simulate_states(cfg)?;
    let c = &cfg.simulation.cumulants;
    let bins = (c.max_deg / c.bin_deg).round().max(1.0) as usize;
    let degs: Vec<f64> = (0..bins).map(|k| (k as f64 + 0.5) * c.bin_deg).collect();
    let thetas: Vec<f64> = degs.iter().map(|d| d.to_radians()).collect();
    let mut rows = Vec::new();
    for (k, (name, rho)) in [("undistilled", &st.initial), ("distilled", &st.mixture)].into_iter().enumerate() {
        for (d, e) in degs.iter().zip(cumulants_exact_curve(rho, &thetas)?) {
            rows.push(CumulantRow {
                state: name.into(),
                kind: "exact".into(),
                theta_deg: *d,
                k1: e.k1,
                k2: e.k2,
                k3: e.k3,
                k4: e.k4,
                k1_err: None,
                k2_err: None,
                k3_err: None,
                k4_err: None,
                n_samples: None,
            });
        }
        let base = streams::CUMULANTS + ((k as u64) << 32);
        let (_, xs) = sample_at_phases(rho, &thetas, c.samples_per_bin, cfg.simulation.seed, base)?;
        for (j, d) in degs.iter().enumerate() {
            let chunk = &xs[j * c.samples_per_bin..(j + 1) * c.samples_per_bin];
            let s = cumulants(chunk)?;
            let err = cumulant_errors(chunk, CUMULANT_BATCHES.min(chunk.len() / 2)).ok();
            rows.push(CumulantRow {
                state: name.into(),
                kind: "sampled".into(),
                theta_deg: *d,
                k1: s.k1,
                k2: s.k2,
                k3: s.k3,
                k4: s.k4,
                k1_err: err.map(|e| e[0]),
                k2_err: err.map(|e| e[1]),
                k3_err: err.map(|e| e[2]),
                k4_err: err.map(|e| e[3]),
                n_samples: Some(chunk.len()),
            });
        }
    }
    let mut w = csv_writer(out, "cumulants.csv")?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(rows)
}

/// `wigner_undistilled.csv` and `wigner_distilled.csv` on the configured
/// square grid. Returns the minimum of each surface.
pub fn cmd_wigner(cfg: &RunConfig, out: &Path) -> CliResult<Vec<(String, f64)>> {
    let st = simulate_states(cfg)?;
    let w = &cfg.simulation.wigner;
    let steps = (2.0 * w.half_width / w.step).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|j| -w.half_width + j as f64 * w.step).collect();
    let mut mins = Vec::new();
    for (name, rho) in [("undistilled", &st.initial), ("distilled", &st.mixture)] {
        let surface = wigner(rho, &grid, &grid)?;
        let mut f = create(out, &format!("wigner_{name}.csv"))?;
        write_wigner_csv(&surface, &mut f)?;
        f.flush()?;
        mins.push((name.to_string(), surface.min()));
    }
    Ok(mins)
}

#[derive(Serialize)]
struct SpreadRow {
    iteration: usize,
    reference_vx: f64,
    reference_vp: f64,
    distilled_vx: f64,
    distilled_vp: f64,
    flagged: usize,
}

/// Synthetic traces of the undistilled state as reference and the mixture
/// as distilled pulse, run through phase recovery. Writes
/// `phase_report.json` and the per-iteration fits in `phase_spread.csv`.
pub fn cmd_phase_pipeline(cfg: &RunConfig, out: &Path) -> CliResult<PipelineReport> {
    let st = simulate_states(cfg)?;
    let report = run_pipeline(&st.initial, &st.mixture, &cfg.phase, cfg.simulation.seed)?;
    write_json(out, "phase_report.json", &report)?;
    let mut w = csv_writer(out, "phase_spread.csv")?;
    for e in &report.spread.iterations {
        w.serialize(SpreadRow {
            iteration: e.iteration,
            reference_vx: e.reference.vx,
            reference_vp: e.reference.vp,
            distilled_vx: e.distilled.vx,
            distilled_vp: e.distilled.vp,
            flagged: e.flagged,
        })?;
    }
    w.flush()?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub var_x_db: f64,
    pub var_p_db: f64,
    pub purity: f64,
    pub undistilled_var_x_db: f64,
    pub undistilled_var_p_db: f64,
    pub undistilled_purity: f64,
}

fn parameter_name(p: SweepParameter) -> &'static str {
    match p {
        SweepParameter::SqueezingDb => "squeezing_db",
        SweepParameter::TapEnergyTransmission => "tap_energy_transmission",
        SweepParameter::HeraldingEfficiency => "heralding_efficiency",
        SweepParameter::ModeNumber => "mode_number",
        SweepParameter::HomVisibility => "hom_visibility",
    }
}

/// Config with the swept quantity set to `value`.
pub fn swept_config(cfg: &RunConfig, parameter: SweepParameter, value: f64) -> CliResult<RunConfig> {
    let mut c = cfg.clone();
    match parameter {
        SweepParameter::SqueezingDb => {
            let gain = gain_from_squeezing_db(value);
            c.source = match &cfg.source {
                // the characterized total is the single-mode photon number of that gain
                SourceSpec::Characterized(s) => SourceSpec::Characterized(CharacterizedSource {
                    mean_photons: gain.sinh().powi(2),
                    mode_number: s.mode_number,
                }),
                SourceSpec::Explicit(e) => SourceSpec::Explicit(ExplicitSource {
                    gain,
                    coefficients: e.coefficients.clone(),
                }),
            };
        }
        SweepParameter::TapEnergyTransmission => c.tap.energy_transmission = value,
        SweepParameter::HeraldingEfficiency => c.tap.heralding_efficiency = value,
        SweepParameter::ModeNumber => {
            c.source = match &cfg.source {
                SourceSpec::Characterized(s) => SourceSpec::Characterized(CharacterizedSource {
                    mean_photons: s.mean_photons,
                    mode_number: value,
                }),
                SourceSpec::Explicit(e) => SourceSpec::Explicit(ExplicitSource {
                    gain: e.gain,
                    coefficients: schmidt_from_mode_number(value, cfg.simulation.schmidt_modes)
                        .map_err(CliError::Config)?,
                }),
            };
        }
        SweepParameter::HomVisibility => {
            c.budget.hom_visibility = value;
            if c.budget.total_override.take().is_some() {
                log::warn!("sweeping hom_visibility drops budget.total_override");
            }
        }
    }
    c.validate().map_err(|e| {
        CliError::Config(Error::Config(format!("sweep value {value} of {}: {e}", parameter_name(parameter))))
    })?;
    Ok(c)
}

/// Undistilled and mixture statistics at every sweep value, in `sweep.csv`.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> CliResult<Vec<SweepRow>> {
    let p = cfg.sweep.parameter;
    let mut rows = Vec::new();
    for &v in &cfg.sweep.values {
        let c = swept_config(cfg, p, v)?;
        let st = simulate_states(&c)?;
        let m = StateSummary::of("mixture", &st.mixture)?;
        let u = StateSummary::of("initial", &st.initial)?;
        log::info!("{} = {v}: Var X {:.4} dB", parameter_name(p), m.var_x_db);
        rows.push(SweepRow {
            parameter: parameter_name(p).into(),
            value: v,
            var_x_db: m.var_x_db,
            var_p_db: m.var_p_db,
            purity: m.purity,
            undistilled_var_x_db: u.var_x_db,
            undistilled_var_p_db: u.var_p_db,
            undistilled_purity: u.purity,
        });
    }
    let mut w = csv_writer(out, "sweep.csv")?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(rows)
}
