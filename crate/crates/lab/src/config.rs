//! Run configuration: plain-text `key = value` lines with `#` comments.
//!
//! Values are applied in layers: built-in defaults, then a config file, then
//! command-line overrides. Unknown keys are rejected by name.

use std::fs;
use std::path::Path;

use biphoton::{ApparatusModel, Geometry, RunSettings, ScanConfig};

use crate::{LabError, Result};

/// Every key a config file may set.
pub const KEYS: [&str; 12] = [
    "theta_p_deg",
    "theta_a_deg",
    "gamma",
    "period_mm",
    "slit_mm",
    "pair_rate_hz",
    "accidental_rate_hz",
    "dwell_s",
    "x_start_mm",
    "x_end_mm",
    "n_points",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub theta_p_deg: f64,
    /// Both analyzers; `None` leaves the choice to the command.
    pub theta_a_deg: Option<f64>,
    pub gamma: f64,
    pub period_mm: f64,
    pub slit_mm: f64,
    pub pair_rate_hz: f64,
    pub accidental_rate_hz: f64,
    pub dwell_s: f64,
    pub x_start_mm: f64,
    pub x_end_mm: f64,
    pub n_points: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let apparatus = ApparatusModel::default();
        let geometry = Geometry::default();
        let scan = ScanConfig::default();
        RunConfig {
            theta_p_deg: 45.0,
            theta_a_deg: None,
            gamma: apparatus.gamma_mode_overlap,
            period_mm: geometry.fringe_period_mm,
            slit_mm: geometry.slit_width_mm,
            pair_rate_hz: apparatus.pair_rate_hz,
            accidental_rate_hz: apparatus.accidental_rate_hz,
            dwell_s: apparatus.integration_time_s,
            x_start_mm: scan.x_start_mm,
            x_end_mm: scan.x_end_mm,
            n_points: scan.n_points,
            seed: scan.seed,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| LabError::Config(format!("invalid value {value:?} for key {key}")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "theta_p_deg" => self.theta_p_deg = parse_num(key, value)?,
            "theta_a_deg" => self.theta_a_deg = Some(parse_num(key, value)?),
            "gamma" => self.gamma = parse_num(key, value)?,
            "period_mm" => self.period_mm = parse_num(key, value)?,
            "slit_mm" => self.slit_mm = parse_num(key, value)?,
            "pair_rate_hz" => self.pair_rate_hz = parse_num(key, value)?,
            "accidental_rate_hz" => self.accidental_rate_hz = parse_num(key, value)?,
            "dwell_s" => self.dwell_s = parse_num(key, value)?,
            "x_start_mm" => self.x_start_mm = parse_num(key, value)?,
            "x_end_mm" => self.x_end_mm = parse_num(key, value)?,
            "n_points" => self.n_points = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            other => return Err(LabError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` text on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                LabError::Config(format!(
                    "line {}: expected key=value, got {line:?}",
                    lineno + 1
                ))
            })?;
            self.set(key, value)
                .map_err(|e| LabError::Config(format!("line {}: {}", lineno + 1, strip(e))))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|source| LabError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.apply_text(&text)
    }

    /// Applies a single `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| LabError::Config(format!("expected key=value, got {assignment:?}")))?;
        self.set(key, value)
    }

    pub fn apparatus(&self) -> ApparatusModel {
        ApparatusModel {
            gamma_mode_overlap: self.gamma,
            pair_rate_hz: self.pair_rate_hz,
            accidental_rate_hz: self.accidental_rate_hz,
            integration_time_s: self.dwell_s,
        }
    }

    pub fn geometry(&self) -> Geometry {
        Geometry {
            fringe_period_mm: self.period_mm,
            slit_width_mm: self.slit_mm,
            ..Geometry::default()
        }
    }

    pub fn scan(&self) -> ScanConfig {
        ScanConfig {
            x_start_mm: self.x_start_mm,
            x_end_mm: self.x_end_mm,
            n_points: self.n_points,
            seed: self.seed,
        }
    }

    /// Scan settings with both analyzers at `theta_a_deg`.
    pub fn settings(&self, theta_a_deg: f64) -> RunSettings {
        RunSettings::new(
            self.theta_p_deg,
            theta_a_deg,
            self.apparatus(),
            self.geometry(),
            self.scan(),
        )
    }

    /// Checks every field against the model invariants.
    pub fn validate(&self) -> Result<()> {
        self.settings(self.theta_a_deg.unwrap_or(45.0))
            .validate()
            .map_err(|e| LabError::Config(e.to_string()))
    }
}

fn strip(e: LabError) -> String {
    match e {
        LabError::Config(msg) => msg,
        other => other.to_string(),
    }
}
