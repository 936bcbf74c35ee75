use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use distill_cli::{
    cmd_cumulants, cmd_phase_pipeline, cmd_simulate, cmd_sweep, cmd_table1, cmd_wigner, load_config, CliResult,
    Overrides,
};

#[derive(Parser)]
#[command(name = "distill", version, about = "Squeezing distillation by photon subtraction: simulation and analysis")]
struct Cli {
    /// JSON run config; the built-in operating point when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides outputs.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Root seed (overrides simulation.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Per-arm Fock cutoff (overrides simulation.cutoff).
    #[arg(long, global = true)]
    cutoff: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Initial, distilled and mixture states with their density matrices.
    Simulate,
    /// Generated against reconstructed variances, purity and fidelity.
    Table1,
    /// Sampled and exact cumulants against the quadrature phase.
    Cumulants,
    /// Wigner surfaces of the undistilled and distilled states.
    Wigner,
    /// Synthetic traces through Monte-Carlo phase recovery.
    PhasePipeline,
    /// Squeezing against the configured sweep parameter.
    Sweep,
}

fn run(cli: &Cli) -> CliResult<()> {
    let overrides = Overrides {
        seed: cli.seed,
        cutoff: cli.cutoff,
        out: cli.out.clone(),
    };
    let cfg = load_config(cli.config.as_deref(), &overrides)?;
    let out = PathBuf::from(&cfg.outputs.dir);
    match cli.command {
        Command::Simulate => {
            for s in cmd_simulate(&cfg, &out)? {
                println!(
                    "{:<10} Var X {:+.3} dB  Var P {:+.3} dB  purity {:.4}",
                    s.state, s.var_x_db, s.var_p_db, s.purity
                );
            }
        }
        Command::Table1 => {
            println!(
                "{:<12} {:>20} {:>20} {:>16} {:>9}",
                "state", "Var X sim/rec (dB)", "Var P sim/rec (dB)", "purity sim/rec", "fidelity"
            );
            for r in cmd_table1(&cfg, &out)? {
                println!(
                    "{:<12} {:>9.3} / {:<8.3} {:>9.3} / {:<8.3} {:>6.3} / {:<7.3} {:>9.5}",
                    r.state,
                    r.sim_var_x_db,
                    r.rec_var_x_db,
                    r.sim_var_p_db,
                    r.rec_var_p_db,
                    r.sim_purity,
                    r.rec_purity,
                    r.fidelity
                );
            }
        }
        Command::Cumulants => {
            let rows = cmd_cumulants(&cfg, &out)?;
            println!("{} rows written to {}", rows.len(), out.join("cumulants.csv").display());
        }
        Command::Wigner => {
            for (name, min) in cmd_wigner(&cfg, &out)? {
                println!("{name:<12} min W = {min:.3e}");
            }
        }
        Command::PhasePipeline => {
            let r = cmd_phase_pipeline(&cfg, &out)?;
            println!(
                "reference {:+.3} dB (truth {:+.3})  distilled {:+.3} ± {:.3} dB (truth {:+.3})  rms phase error {:.3} rad",
                r.reference_db, r.reference_truth_db, r.distilled_db, r.distilled_std_db, r.distilled_truth_db,
                r.rms_phase_error
            );
        }
        Command::Sweep => {
            for r in cmd_sweep(&cfg, &out)? {
                println!(
                    "{} = {:<8} Var X {:+.3} dB  Var P {:+.3} dB  purity {:.4}",
                    r.parameter, r.value, r.var_x_db, r.var_p_db, r.purity
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
