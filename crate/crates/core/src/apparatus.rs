//! Phenomenological model of the optical bench.
//!
//! The transverse position of the scanning detector maps linearly onto the
//! relative phase of the two pair amplitudes. Everything that makes the two
//! birth modes partly distinguishable is lumped into a mode-overlap factor,
//! except for the slit, whose top-hat average over one fringe is modeled
//! explicitly.

use core::f64::consts::{PI, TAU};

use crate::state::{ideal_visibility, project_analyzers, renormalize};
use crate::{AnalyzerPair, Angle, BiphotonState, Error, Result};

/// Bench geometry. Lengths in millimetres.
///
/// Only the fringe period, phase offset, origin and slit width enter the
/// model. The remaining fields record the physical layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    /// Period of the phase ramp in the scan plane.
    pub fringe_period_mm: f64,
    pub phase_offset_rad: f64,
    pub x_origin_mm: f64,
    pub slit_width_mm: f64,
    pub detector_distance_mm: f64,
    pub crystal_separation_mm: f64,
    pub wavelength_nm: f64,
}

impl Default for Geometry {
    /// 5 mm crystal separation, detectors 80 cm away, 0.5 mm slit, 884 nm
    /// pairs, and a 2 mm fringe period.
    fn default() -> Self {
        Geometry {
            fringe_period_mm: 2.0,
            phase_offset_rad: 0.0,
            x_origin_mm: 0.0,
            slit_width_mm: 0.5,
            detector_distance_mm: 800.0,
            crystal_separation_mm: 5.0,
            wavelength_nm: 884.0,
        }
    }
}

/// Non-fatal geometry problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeometryWarning {
    /// The slit spans at least one fringe, so the averaged contrast is at or
    /// past the first zero of the slit response.
    SlitWiderThanPeriod { slit_mm: f64, period_mm: f64 },
}

impl core::fmt::Display for GeometryWarning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GeometryWarning::SlitWiderThanPeriod { slit_mm, period_mm } => write!(
                f,
                "slit width {slit_mm} mm is not smaller than the fringe period {period_mm} mm; fringes wash out"
            ),
        }
    }
}

fn require(name: &'static str, value: f64, ok: bool, expected: &'static str) -> Result<()> {
    if value.is_finite() && ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            expected,
        })
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let g = self;
        require(
            "fringe_period_mm",
            g.fringe_period_mm,
            g.fringe_period_mm > 0.0,
            "> 0",
        )?;
        require(
            "phase_offset_rad",
            g.phase_offset_rad,
            true,
            "a finite value",
        )?;
        require("x_origin_mm", g.x_origin_mm, true, "a finite value")?;
        require(
            "slit_width_mm",
            g.slit_width_mm,
            g.slit_width_mm >= 0.0,
            ">= 0",
        )?;
        require(
            "detector_distance_mm",
            g.detector_distance_mm,
            g.detector_distance_mm > 0.0,
            "> 0",
        )?;
        require(
            "crystal_separation_mm",
            g.crystal_separation_mm,
            g.crystal_separation_mm > 0.0,
            "> 0",
        )?;
        require(
            "wavelength_nm",
            g.wavelength_nm,
            g.wavelength_nm > 0.0,
            "> 0",
        )
    }

    pub fn warning(&self) -> Option<GeometryWarning> {
        (self.slit_width_mm >= self.fringe_period_mm).then_some(
            GeometryWarning::SlitWiderThanPeriod {
                slit_mm: self.slit_width_mm,
                period_mm: self.fringe_period_mm,
            },
        )
    }
}

/// Detection model of the bench.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApparatusModel {
    /// Visibility ceiling from imperfect spatial overlap of the two birth modes.
    pub gamma_mode_overlap: f64,
    /// Detected pair rate with both analyzers removed.
    pub pair_rate_hz: f64,
    /// Position-independent background coincidences.
    pub accidental_rate_hz: f64,
    /// Dwell time per scan position.
    pub integration_time_s: f64,
}

impl Default for ApparatusModel {
    fn default() -> Self {
        ApparatusModel {
            gamma_mode_overlap: 0.80,
            pair_rate_hz: 4000.0,
            accidental_rate_hz: 0.0,
            integration_time_s: 10.0,
        }
    }
}

impl ApparatusModel {
    pub fn validate(&self) -> Result<()> {
        let a = self;
        require(
            "gamma_mode_overlap",
            a.gamma_mode_overlap,
            (0.0..=1.0).contains(&a.gamma_mode_overlap),
            "a value in [0, 1]",
        )?;
        require(
            "pair_rate_hz",
            a.pair_rate_hz,
            a.pair_rate_hz >= 0.0,
            ">= 0",
        )?;
        require(
            "accidental_rate_hz",
            a.accidental_rate_hz,
            a.accidental_rate_hz >= 0.0,
            ">= 0",
        )?;
        require(
            "integration_time_s",
            a.integration_time_s,
            a.integration_time_s > 0.0,
            "> 0",
        )
    }
}

/// Relative phase of the two birth amplitudes at detector position `x_mm`:
/// `2π (x − x₀) / Λ + φ₀`.
pub fn phase_at(geometry: &Geometry, x_mm: f64) -> Result<Angle> {
    let phase =
        TAU * (x_mm - geometry.x_origin_mm) / geometry.fringe_period_mm + geometry.phase_offset_rad;
    Angle::from_radians(phase)
}

/// Contrast kept after averaging `cos φ` over a top-hat slit: `|sinc(π w / Λ)|`.
pub fn slit_visibility_factor(geometry: &Geometry) -> f64 {
    let u = PI * geometry.slit_width_mm / geometry.fringe_period_mm;
    if u == 0.0 {
        return 1.0;
    }
    (libm::sin(u) / u).abs().min(1.0)
}

/// `γ · slit factor · ideal visibility`. Background is not included here.
pub fn effective_visibility(
    state: &BiphotonState,
    apparatus: &ApparatusModel,
    geometry: &Geometry,
) -> Result<f64> {
    Ok(apparatus.gamma_mode_overlap * slit_visibility_factor(geometry) * ideal_visibility(state)?)
}

/// Mean coincidence counts per dwell as a function of detector position,
/// for one fixed pump state and analyzer setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeModel {
    /// Mean interfering counts per dwell, `pair_rate · yield · dwell`.
    pub signal_counts: f64,
    pub background_counts: f64,
    pub visibility: f64,
    /// Relative phase carried by the filtered state itself.
    pub state_phase: f64,
    pub yield_probability: f64,
    geometry: Geometry,
}

impl FringeModel {
    pub fn new(
        state: &BiphotonState,
        analyzers: AnalyzerPair,
        apparatus: &ApparatusModel,
        geometry: &Geometry,
    ) -> Result<Self> {
        apparatus.validate()?;
        geometry.validate()?;
        let filtered = project_analyzers(state, analyzers)?;
        let (visibility, state_phase) = if filtered.state.norm_sqr() > 0.0 {
            let unit = renormalize(&filtered.state)?;
            (
                effective_visibility(&unit, apparatus, geometry)?,
                unit.relative_phase(),
            )
        } else {
            (0.0, 0.0)
        };
        Ok(FringeModel {
            signal_counts: apparatus.pair_rate_hz
                * filtered.yield_probability
                * apparatus.integration_time_s,
            background_counts: apparatus.accidental_rate_hz * apparatus.integration_time_s,
            visibility,
            state_phase,
            yield_probability: filtered.yield_probability,
            geometry: *geometry,
        })
    }

    pub fn mean_at(&self, x_mm: f64) -> Result<f64> {
        let phase = phase_at(&self.geometry, x_mm)?.radians() + self.state_phase;
        let mean = self.signal_counts * (1.0 + self.visibility * libm::cos(phase))
            + self.background_counts;
        Ok(mean.max(0.0))
    }
}

/// Mean coincidence counts per dwell at detector position `x_mm`.
pub fn expected_coincidence_rate(
    state: &BiphotonState,
    analyzers: AnalyzerPair,
    apparatus: &ApparatusModel,
    geometry: &Geometry,
    x_mm: f64,
) -> Result<f64> {
    FringeModel::new(state, analyzers, apparatus, geometry)?.mean_at(x_mm)
}
