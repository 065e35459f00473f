//! Command-line front end.
//!
//! Data goes to standard output (or `--out`), diagnostics to standard error.
//! Exit codes: 0 success, 2 configuration error, 3 numeric or fit failure.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use biphoton::distill::{default_grid, DEFAULT_REFINE_TOL_DEG};
use biphoton::experiment::DEFAULT_RESAMPLES;
use biphoton::{
    balance_residual, bootstrap_error, child_seed, concurrence, distill_unknown,
    distillation_angle, estimate_period, fit_fringes, ideal_visibility, prepare_state,
    project_analyzers, run_scan, scan_analyzers, AnalyzerPair, Angle, ScanConfig,
};
use clap::{Args, Parser, Subcommand};

use crate::dataset_csv::write_dataset;
use crate::report_csv::write_report;
use crate::reproduce::{base_config, reproduce, write_table, DatasetId};
use crate::{LabError, Result, RunConfig};

const KEYS_HELP: &str = "Config keys and units: theta_p_deg [deg], theta_a_deg [deg], \
gamma [0..1], period_mm [mm], slit_mm [mm], pair_rate_hz [Hz], accidental_rate_hz [Hz], \
dwell_s [s], x_start_mm [mm], x_end_mm [mm], n_points [count], seed [u64].";

#[derive(Debug, Parser)]
#[command(
    name = "biphoton-lab",
    version,
    about = "Two-crystal down-conversion fringe simulator and analyzer distillation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Config file of `key = value` lines with `#` comments
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Random seed [u64]
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Pump polarization angle θ_P [degrees]
    #[arg(long = "theta-p", value_name = "DEG", allow_negative_numbers = true)]
    pub theta_p: Option<f64>,
    /// Analyzer angle θ_A, both arms [degrees]
    #[arg(long = "theta-a", value_name = "DEG", allow_negative_numbers = true)]
    pub theta_a: Option<f64>,
    /// Override one config key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", long_help = KEYS_HELP)]
    pub set: Vec<String>,
    /// Write CSV output to PATH instead of standard output
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Amplitudes and entanglement of the prepared pair state
    State {
        /// Pump polarization angle θ_P [degrees]
        #[arg(value_name = "THETA_P_DEG", allow_negative_numbers = true)]
        theta_p_pos: Option<f64>,
        /// Relative phase φ [degrees]
        #[arg(value_name = "PHI_DEG", allow_negative_numbers = true)]
        phi_pos: Option<f64>,
        /// Pump polarization angle θ_P [degrees]
        #[arg(long = "theta-p", value_name = "DEG", allow_negative_numbers = true)]
        theta_p: Option<f64>,
        /// Relative phase φ [degrees]
        #[arg(long, value_name = "DEG", allow_negative_numbers = true)]
        phi: Option<f64>,
    },
    /// Closed-form analyzer angle that balances the two pair amplitudes
    DistillAngle {
        /// Pump polarization angle θ_P [degrees]
        #[arg(value_name = "THETA_P_DEG", allow_negative_numbers = true)]
        theta_p_pos: Option<f64>,
        /// Pump polarization angle θ_P [degrees]
        #[arg(long = "theta-p", value_name = "DEG", allow_negative_numbers = true)]
        theta_p: Option<f64>,
    },
    /// Simulate one detector scan, print the dataset CSV and the fitted visibility
    Scan(RunArgs),
    /// Search analyzer angles for maximal fringe visibility
    Distill {
        #[command(flatten)]
        run: RunArgs,
        /// Analyzer angles to scan, comma separated [degrees] (default 5,10,...,85)
        #[arg(long, value_name = "A,B,C", value_delimiter = ',')]
        grid: Vec<f64>,
        /// Search without using θ_P; θ_P only drives the simulated source
        #[arg(long)]
        unknown: bool,
        /// Stop parabolic refinement below this stencil half-width [degrees]
        #[arg(long = "refine-tol", value_name = "DEG", default_value_t = DEFAULT_REFINE_TOL_DEG)]
        refine_tol: f64,
    },
    /// Model and simulated visibilities against the published values
    Reproduce {
        /// Data set: figs2-7 or fig8
        #[arg(value_name = "DATASET")]
        dataset: String,
        #[command(flatten)]
        run: RunArgs,
    },
}

fn load_config(base: RunConfig, run: &RunArgs) -> Result<RunConfig> {
    let mut c = base;
    if let Some(path) = &run.config {
        c.apply_file(path)?;
    }
    for assignment in &run.set {
        c.apply_override(assignment)?;
    }
    if let Some(seed) = run.seed {
        c.seed = seed;
    }
    if let Some(tp) = run.theta_p {
        c.theta_p_deg = tp;
    }
    if let Some(ta) = run.theta_a {
        c.theta_a_deg = Some(ta);
    }
    c.validate()?;
    Ok(c)
}

fn emit(run: &RunArgs, text: &str, out: &mut dyn Write) -> Result<()> {
    match &run.out {
        Some(path) => fs::write(path, text).map_err(|source| LabError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => out
            .write_all(text.as_bytes())
            .map_err(|source| LabError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|source| LabError::Io {
            path: "<stdout>".into(),
            source,
        })
}

fn required(pos: Option<f64>, flag: Option<f64>, name: &str) -> Result<f64> {
    pos.or(flag)
        .ok_or_else(|| LabError::Config(format!("missing {name}")))
}

fn cmd_state(theta_p_deg: f64, phi_deg: f64) -> Result<String> {
    let s = prepare_state(
        Angle::from_degrees(theta_p_deg)?,
        Angle::from_degrees(phi_deg)?,
    );
    let (h, v) = (s.amp_h(), s.amp_v());
    Ok(format!(
        "theta_p_deg={theta_p_deg}\nphi_deg={phi_deg}\n\
         amp_h={}{:+}i\namp_v={}{:+}i\nconcurrence={}\nideal_visibility={}\n",
        h.re,
        h.im,
        v.re,
        v.im,
        concurrence(&s)?,
        ideal_visibility(&s)?,
    ))
}

fn cmd_distill_angle(theta_p_deg: f64) -> Result<String> {
    let theta_p = Angle::from_degrees(theta_p_deg)?;
    let theta_a = distillation_angle(theta_p)?;
    let filtered = project_analyzers(
        &prepare_state(theta_p, Angle::ZERO),
        AnalyzerPair::equal(theta_a),
    )?;
    Ok(format!(
        "theta_p_deg={theta_p_deg}\ntheta_a_deg={}\nyield={}\nresidual={}\n",
        theta_a.degrees(),
        filtered.yield_probability,
        balance_residual(theta_p, theta_a),
    ))
}

fn warn_geometry(config: &RunConfig, err: &mut dyn Write) {
    if let Some(w) = config.geometry().warning() {
        let _ = writeln!(err, "warning: {w}");
    }
    if config.scan().is_short_for(config.period_mm) {
        let _ = writeln!(
            err,
            "warning: scan span {} mm is shorter than one fringe period {} mm; visibility is poorly conditioned",
            config.scan().span_mm(),
            config.period_mm
        );
    }
}

fn cmd_scan(run: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let config = load_config(RunConfig::default(), run)?;
    warn_geometry(&config, err);
    let dataset = run_scan(&config.settings(config.theta_a_deg.unwrap_or(45.0)))?;
    emit(run, &write_dataset(&dataset), out)?;

    let est = fit_fringes(&dataset, config.period_mm)?;
    let boot = bootstrap_error(&dataset, config.period_mm, DEFAULT_RESAMPLES)?;
    let mut summary = format!(
        "# v_hat={}\n# std_err={}\n# bootstrap_std_err={}\n# mean_level={}\n# phase_offset_rad={}\n",
        est.v_hat, est.std_err, boot, est.mean_level, est.phase_offset_rad
    );
    if est.above_unity {
        summary.push_str("# above_unity=true\n");
    }
    if let Ok(period) = estimate_period(&dataset) {
        summary.push_str(&format!("# period_estimate_mm={period}\n"));
    }
    write_out(out, &summary)
}

fn cmd_distill(
    run: &RunArgs,
    grid: &[f64],
    unknown: bool,
    refine_tol: f64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    let config = load_config(RunConfig::default(), run)?;
    warn_geometry(&config, err);
    let grid = if grid.is_empty() {
        default_grid()
    } else {
        grid.to_vec()
    };

    let text = if unknown {
        let mut calls = 0u64;
        let report = distill_unknown(
            |theta_a_deg| {
                let mut settings = config.settings(theta_a_deg);
                settings.scan = ScanConfig {
                    seed: child_seed(config.seed, calls),
                    ..settings.scan
                };
                calls += 1;
                fit_fringes(&run_scan(&settings)?, config.period_mm)
            },
            &grid,
            refine_tol,
        )?;
        write_report(&report, None)
    } else {
        let report = scan_analyzers(
            config.theta_p_deg,
            &config.apparatus(),
            &config.geometry(),
            &config.scan(),
            &grid,
        )?;
        write_report(&report, Some(config.theta_p_deg))
    };
    emit(run, &text, out)
}

fn cmd_reproduce(dataset: &str, run: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let id: DatasetId = dataset.parse()?;
    let config = load_config(base_config(), run)?;
    let rows = reproduce(id, &config)?;
    emit(run, &write_table(id, &config, &rows), out)
}

/// Runs one command and returns the process exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::State {
            theta_p_pos,
            phi_pos,
            theta_p,
            phi,
        } => required(*theta_p_pos, *theta_p, "THETA_P_DEG")
            .and_then(|tp| cmd_state(tp, phi_pos.or(*phi).unwrap_or(0.0)))
            .and_then(|text| write_out(out, &text)),
        Command::DistillAngle {
            theta_p_pos,
            theta_p,
        } => required(*theta_p_pos, *theta_p, "THETA_P_DEG")
            .and_then(cmd_distill_angle)
            .and_then(|text| write_out(out, &text)),
        Command::Scan(run) => cmd_scan(run, out, err),
        Command::Distill {
            run,
            grid,
            unknown,
            refine_tol,
        } => cmd_distill(run, grid, *unknown, *refine_tol, out, err),
        Command::Reproduce { dataset, run } => cmd_reproduce(dataset, run, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
