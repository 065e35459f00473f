//! Model-vs-measurement tables for the two published data sets.
//!
//! Each row is simulated with its own child seed; rows run on scoped threads
//! and are collected in table order, so the output depends only on the seed.

use std::fmt::Write as _;
use std::str::FromStr;
use std::thread;

use biphoton::{
    child_seed, fit_fringes, prepare_state, project_analyzers, renormalize, run_scan, AnalyzerPair,
    Angle, ScanConfig,
};

use crate::{LabError, Result, RunConfig};

/// Mode-overlap factor matching the maximal-state visibility of each set.
pub const GAMMA_FIGS_2_TO_7: f64 = 0.80;
pub const GAMMA_FIG_8: f64 = 0.66;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetId {
    Figs2To7,
    Fig8,
}

impl FromStr for DatasetId {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "figs2-7" => Ok(DatasetId::Figs2To7),
            "fig8" => Ok(DatasetId::Fig8),
            other => Err(LabError::Config(format!(
                "unknown dataset {other:?}; expected figs2-7 or fig8"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub theta_p_deg: f64,
    pub theta_a_deg: f64,
    /// Reported visibility, when the text states one.
    pub measured_v: Option<f64>,
    /// Reported but outside what the model describes.
    pub excluded: bool,
}

const fn row(theta_p_deg: f64, theta_a_deg: f64, measured_v: Option<f64>) -> Reference {
    Reference {
        theta_p_deg,
        theta_a_deg,
        measured_v,
        excluded: false,
    }
}

impl DatasetId {
    pub fn gamma(self) -> f64 {
        match self {
            DatasetId::Figs2To7 => GAMMA_FIGS_2_TO_7,
            DatasetId::Fig8 => GAMMA_FIG_8,
        }
    }

    pub fn references(self) -> Vec<Reference> {
        match self {
            DatasetId::Figs2To7 => vec![
                row(45.0, 45.0, Some(0.80)),
                row(22.5, 45.0, Some(0.50)),
                // The 56% measured with analyzers at 22.5° is not what the
                // filtering model predicts (about 0.11); kept for display only.
                Reference {
                    excluded: true,
                    ..row(22.5, 22.5, Some(0.56))
                },
                row(22.5, 55.0, Some(0.72)),
                row(22.5, 57.0, Some(0.77)),
                row(22.5, 59.0, Some(0.70)),
            ],
            DatasetId::Fig8 => vec![
                row(45.0, 45.0, Some(0.66)),
                row(10.0, 45.0, None),
                row(20.0, 45.0, None),
                row(30.0, 45.0, None),
                row(10.0, 67.0, None),
                row(20.0, 59.0, None),
                row(30.0, 53.0, None),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub reference: Reference,
    /// Visibility of the filtered state with a perfect bench.
    pub v_ideal: f64,
    /// `γ · slit factor · v_ideal`.
    pub v_model: f64,
    /// Fitted visibility of the simulated scan.
    pub v_hat: Option<f64>,
    pub std_err: Option<f64>,
}

impl TableRow {
    pub fn status(&self) -> &'static str {
        match (self.reference.excluded, self.reference.measured_v) {
            (true, _) => "excluded",
            (false, Some(_)) => "compared",
            (false, None) => "no_reference",
        }
    }

    /// `|v_model − measured_v|`.
    pub fn abs_diff(&self) -> Option<f64> {
        self.reference.measured_v.map(|p| (self.v_model - p).abs())
    }
}

/// The run configuration `reproduce` starts from: defaults with a point-like
/// slit, so the mode-overlap factor alone sets the maximal visibility.
pub fn base_config() -> RunConfig {
    RunConfig {
        slit_mm: 0.0,
        ..RunConfig::default()
    }
}

fn simulate(config: &RunConfig, gamma: f64, reference: Reference, seed: u64) -> Result<TableRow> {
    let mut config = config.clone();
    config.gamma = gamma;
    config.theta_p_deg = reference.theta_p_deg;
    let mut settings = config.settings(reference.theta_a_deg);
    settings.scan = ScanConfig {
        seed,
        ..settings.scan
    };

    let state = prepare_state(Angle::from_degrees(reference.theta_p_deg)?, Angle::ZERO);
    let filtered = project_analyzers(
        &state,
        AnalyzerPair::equal(Angle::from_degrees(reference.theta_a_deg)?),
    )?;
    let unit = renormalize(&filtered.state)?;
    let v_ideal = biphoton::ideal_visibility(&unit)?;
    let model = settings.fringe_model()?;

    let fit = run_scan(&settings).and_then(|d| fit_fringes(&d, config.period_mm));
    Ok(TableRow {
        reference,
        v_ideal,
        v_model: model.visibility,
        v_hat: fit.as_ref().ok().map(|e| e.v_hat),
        std_err: fit.as_ref().ok().map(|e| e.std_err),
    })
}

pub fn reproduce(id: DatasetId, config: &RunConfig) -> Result<Vec<TableRow>> {
    config.validate()?;
    let references = id.references();
    thread::scope(|scope| {
        let handles: Vec<_> = references
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let seed = child_seed(config.seed, i as u64);
                scope.spawn(move || simulate(config, id.gamma(), r, seed))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("reproduce worker panicked"))
            .collect()
    })
}

pub const HEADER: &str =
    "theta_p_deg,theta_a_deg,v_ideal,v_model,v_hat,std_err,measured_v,abs_diff,status";

pub fn write_table(id: DatasetId, config: &RunConfig, rows: &[TableRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    let mut out = String::new();
    let name = match id {
        DatasetId::Figs2To7 => "figs2-7",
        DatasetId::Fig8 => "fig8",
    };
    let _ = writeln!(out, "# dataset={name}");
    let _ = writeln!(out, "# gamma={}", id.gamma());
    let _ = writeln!(out, "# slit_mm={}", config.slit_mm);
    let _ = writeln!(out, "# period_mm={}", config.period_mm);
    let _ = writeln!(out, "# seed={}", config.seed);
    let _ = writeln!(out, "{HEADER}");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{},{},{},{},{}",
            r.reference.theta_p_deg,
            r.reference.theta_a_deg,
            r.v_ideal,
            r.v_model,
            opt(r.v_hat),
            opt(r.std_err),
            r.reference
                .measured_v
                .map(|v| v.to_string())
                .unwrap_or_default(),
            opt(r.abs_diff()),
            r.status(),
        );
    }
    out
}
