use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use oam_core::cli::{
    cmd_analyze, cmd_bound, cmd_efficiency_sweep, cmd_metrology, cmd_render_pattern,
    cmd_simulate_scan, default_sensing_mode, parse_sensing_mode, MetrologyRequest,
};
use oam_core::config::ExperimentConfig;
use oam_core::metrology::SensingMode;

/// Simulator for two-photon OAM entanglement transfer, slit-mask analysis
/// and angular metrology.
#[derive(Parser)]
#[command(name = "oam-sim", version, about)]
struct Cli {
    /// Experiment configuration (TOML); defaults mirror the reference setup.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// RNG seed; overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Emit a machine-readable JSON report instead of text.
    #[arg(long, global = true)]
    json_report: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a spiral phase pattern to an 8-bit graymap.
    RenderPattern {
        /// Spiral charge (nonzero; negative flips handedness).
        #[arg(long)]
        l: i32,
        /// Output PGM path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Mode-conversion efficiency versus OAM order (CSV).
    EfficiencySweep {
        /// Comma-separated OAM orders, e.g. 10,100,300.
        #[arg(long, value_delimiter = ',', required = true)]
        l: Vec<u32>,
        /// Output CSV path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the configured coincidence scan to a count-table CSV.
    SimulateScan {
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit fringes / evaluate the witness on a count-table CSV.
    Analyze {
        /// Input count-table CSV.
        #[arg(long)]
        input: PathBuf,
        /// Write the (possibly corrected) table here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Subtract expected accidentals (needs singles columns).
        #[arg(long)]
        correct_accidentals: bool,
        /// Significance (in sigma) required for an entangled verdict.
        #[arg(long, default_value_t = 3.0)]
        k_sigma: f64,
    },
    /// Grid-search the separable-state witness bound.
    Bound {
        /// Grid steps per dimension (>= 32).
        #[arg(long, default_value_t = 256)]
        steps: usize,
    },
    /// Angular-sensitivity budgeting and Monte-Carlo estimation.
    Metrology {
        /// OAM order of the rotating analyzer, or "pol" (default: from config).
        #[arg(long, value_parser = parse_sensing_mode)]
        l: Option<SensingMode>,
        /// Fringe visibility at the working point.
        #[arg(long, default_value_t = 0.98)]
        visibility: f64,
        /// Detected pairs per measurement.
        #[arg(long)]
        pairs: Option<u64>,
        /// Target precision in degrees (reports the required pairs).
        #[arg(long)]
        target_deg: Option<f64>,
        /// Run the Monte-Carlo angle estimator.
        #[arg(long)]
        mc: bool,
        /// Total Monte-Carlo trials.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Distinct random true angles.
        #[arg(long, default_value_t = 20)]
        angles: usize,
        /// CSV of per-trial estimates (trial, true_angle_deg, estimate_deg, sigma_deg).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> oam_core::Result<()> {
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let seed = cli.seed.unwrap_or(config.seed);
    let json = cli.json_report;

    macro_rules! emit {
        ($report:expr) => {{
            let report = $report;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("report serializes")
                );
            } else {
                report.print_text();
            }
        }};
    }

    match cli.command {
        Command::RenderPattern { l, out } => emit!(cmd_render_pattern(&config, l, &out)?),
        Command::EfficiencySweep { l, out } => {
            emit!(cmd_efficiency_sweep(&config, &l, out.as_deref())?)
        }
        Command::SimulateScan { out } => emit!(cmd_simulate_scan(&config, seed, &out)?),
        Command::Analyze {
            input,
            out,
            correct_accidentals,
            k_sigma,
        } => emit!(cmd_analyze(
            &config,
            &input,
            out.as_deref(),
            correct_accidentals,
            k_sigma
        )?),
        Command::Bound { steps } => emit!(cmd_bound(steps)?),
        Command::Metrology {
            l,
            visibility,
            pairs,
            target_deg,
            mc,
            trials,
            angles,
            out,
        } => {
            let request = MetrologyRequest {
                mode: l.unwrap_or_else(|| default_sensing_mode(&config)),
                visibility,
                pairs,
                target_deg,
                mc_trials: mc.then_some(trials),
                mc_angles: angles,
                seed,
            };
            emit!(cmd_metrology(&request, out.as_deref())?)
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
