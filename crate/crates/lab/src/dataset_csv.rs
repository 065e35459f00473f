//! Text form of a fringe scan.
//!
//! ```text
//! # theta_p_deg=45
//! # theta_a_deg=45
//! ...
//! x_mm,counts
//! 0,9874
//! 0.10256410256410256,9712
//! ```
//!
//! Numbers use the shortest representation that parses back to the same
//! `f64`, so reading a file and writing it again reproduces it byte for byte.

use std::fmt::Write as _;

use biphoton::{ApparatusModel, FringeDataset, FringePoint, Geometry, RunSettings, ScanConfig};

use crate::{LabError, Result};

pub const HEADER: &str = "x_mm,counts";

/// Metadata keys in write order. The first block is always present; readers
/// fall back to defaults for the geometry extras when they are missing.
const REQUIRED: [&str; 9] = [
    "theta_p_deg",
    "theta_a_deg",
    "gamma",
    "period_mm",
    "slit_mm",
    "pair_rate_hz",
    "accidental_rate_hz",
    "dwell_s",
    "seed",
];

fn metadata(settings: &RunSettings) -> Vec<(&'static str, String)> {
    let s = settings;
    let (a, g, sc) = (&s.apparatus, &s.geometry, &s.scan);
    vec![
        ("theta_p_deg", s.theta_p_deg.to_string()),
        ("theta_a_deg", s.theta_signal_deg.to_string()),
        ("gamma", a.gamma_mode_overlap.to_string()),
        ("period_mm", g.fringe_period_mm.to_string()),
        ("slit_mm", g.slit_width_mm.to_string()),
        ("pair_rate_hz", a.pair_rate_hz.to_string()),
        ("accidental_rate_hz", a.accidental_rate_hz.to_string()),
        ("dwell_s", a.integration_time_s.to_string()),
        ("seed", sc.seed.to_string()),
        ("theta_a_idler_deg", s.theta_idler_deg.to_string()),
        ("phi_deg", s.phi_deg.to_string()),
        ("phase_offset_rad", g.phase_offset_rad.to_string()),
        ("x_origin_mm", g.x_origin_mm.to_string()),
        ("detector_distance_mm", g.detector_distance_mm.to_string()),
        ("crystal_separation_mm", g.crystal_separation_mm.to_string()),
        ("wavelength_nm", g.wavelength_nm.to_string()),
        ("x_start_mm", sc.x_start_mm.to_string()),
        ("x_end_mm", sc.x_end_mm.to_string()),
        ("n_points", sc.n_points.to_string()),
    ]
}

pub fn write_dataset(dataset: &FringeDataset) -> String {
    let mut out = String::new();
    for (key, value) in metadata(&dataset.settings) {
        let _ = writeln!(out, "# {key}={value}");
    }
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let _ = w.write_record(["x_mm", "counts"]);
    for p in dataset.points() {
        let _ = w.write_record([p.x_mm.to_string(), p.counts.to_string()]);
    }
    let body = w.into_inner().expect("writing to memory cannot fail");
    out.push_str(std::str::from_utf8(&body).expect("csv output is utf-8"));
    out
}

struct Meta(Vec<(String, String)>);

impl Meta {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| LabError::Format(format!("bad value {v:?} for {key}")))
            })
            .transpose()
    }

    fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| LabError::Format(format!("missing metadata key {key}")))
    }
}

pub fn read_dataset(text: &str) -> Result<FringeDataset> {
    let mut pairs = Vec::new();
    for line in text.lines() {
        let Some(rest) = line.strip_prefix('#') else {
            break;
        };
        let rest = rest.trim();
        let (k, v) = rest
            .split_once('=')
            .ok_or_else(|| LabError::Format(format!("metadata line {line:?} is not key=value")))?;
        let (k, v) = (k.trim(), v.trim());
        if !REQUIRED.contains(&k) && !metadata_extras().contains(&k) {
            return Err(LabError::Format(format!("unknown metadata key {k:?}")));
        }
        pairs.push((k.to_string(), v.to_string()));
    }
    let meta = Meta(pairs);
    for key in REQUIRED {
        if meta.raw(key).is_none() {
            return Err(LabError::Format(format!("missing metadata key {key}")));
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| LabError::Format(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != HEADER {
        return Err(LabError::Format(format!(
            "expected header {HEADER:?}, got {header:?}"
        )));
    }
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| LabError::Format(e.to_string()))?;
        if record.len() != 2 {
            return Err(LabError::Format(format!(
                "expected 2 fields, got {}",
                record.len()
            )));
        }
        let x_mm = record[0]
            .parse()
            .map_err(|_| LabError::Format(format!("bad position {:?}", &record[0])))?;
        let counts = record[1]
            .parse()
            .map_err(|_| LabError::Format(format!("bad count {:?}", &record[1])))?;
        points.push(FringePoint { x_mm, counts });
    }

    let geometry_default = Geometry::default();
    let theta_a: f64 = meta.require("theta_a_deg")?;
    let first = points.first().map_or(0.0, |p| p.x_mm);
    let last = points.last().map_or(0.0, |p| p.x_mm);
    let settings = RunSettings {
        theta_p_deg: meta.require("theta_p_deg")?,
        phi_deg: meta.get("phi_deg")?.unwrap_or(0.0),
        theta_signal_deg: theta_a,
        theta_idler_deg: meta.get("theta_a_idler_deg")?.unwrap_or(theta_a),
        apparatus: ApparatusModel {
            gamma_mode_overlap: meta.require("gamma")?,
            pair_rate_hz: meta.require("pair_rate_hz")?,
            accidental_rate_hz: meta.require("accidental_rate_hz")?,
            integration_time_s: meta.require("dwell_s")?,
        },
        geometry: Geometry {
            fringe_period_mm: meta.require("period_mm")?,
            slit_width_mm: meta.require("slit_mm")?,
            phase_offset_rad: meta
                .get("phase_offset_rad")?
                .unwrap_or(geometry_default.phase_offset_rad),
            x_origin_mm: meta
                .get("x_origin_mm")?
                .unwrap_or(geometry_default.x_origin_mm),
            detector_distance_mm: meta
                .get("detector_distance_mm")?
                .unwrap_or(geometry_default.detector_distance_mm),
            crystal_separation_mm: meta
                .get("crystal_separation_mm")?
                .unwrap_or(geometry_default.crystal_separation_mm),
            wavelength_nm: meta
                .get("wavelength_nm")?
                .unwrap_or(geometry_default.wavelength_nm),
        },
        scan: ScanConfig {
            x_start_mm: meta.get("x_start_mm")?.unwrap_or(first),
            x_end_mm: meta.get("x_end_mm")?.unwrap_or(last),
            n_points: meta.get("n_points")?.unwrap_or(points.len()),
            seed: meta.require("seed")?,
        },
    };
    if settings.scan.n_points != points.len() {
        return Err(LabError::Format(format!(
            "n_points={} but {} data rows",
            settings.scan.n_points,
            points.len()
        )));
    }
    FringeDataset::new(points, settings).map_err(|e| LabError::Format(e.to_string()))
}

fn metadata_extras() -> [&'static str; 10] {
    [
        "theta_a_idler_deg",
        "phi_deg",
        "phase_offset_rad",
        "x_origin_mm",
        "detector_distance_mm",
        "crystal_separation_mm",
        "wavelength_nm",
        "x_start_mm",
        "x_end_mm",
        "n_points",
    ]
}
