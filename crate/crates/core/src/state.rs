//! Two-level pair state over the birth-crystal basis.
//!
//! A pair is born either in the first crystal (both photons horizontally
//! polarized, `|2_H,0_V⟩`) or in the second (both vertical, `|0_H,2_V⟩`).
//! The pump polarization angle sets the weights of the two terms and linear
//! analyzers in front of the detectors rescale them, which is how the
//! position entanglement is filtered.

use core::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::{Angle, Error, Result};

/// Slack allowed on the unit-norm ceiling for rounding in the constructors.
const NORM_SLACK: f64 = 1e-12;

/// Pure state `amp_h |2_H,0_V⟩ + amp_v |0_H,2_V⟩`.
///
/// The squared norm lies in `(0, 1]` for states built through [`BiphotonState::new`].
/// Sub-normalized states are the post-selected output of analyzer filtering.
/// The only way to obtain a zero state is a projection that blocks both
/// terms; the measures in this module reject it with [`Error::ZeroNorm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiphotonState {
    amp_h: Complex64,
    amp_v: Complex64,
}

impl BiphotonState {
    pub fn new(amp_h: Complex64, amp_v: Complex64) -> Result<Self> {
        if !(amp_h.re.is_finite()
            && amp_h.im.is_finite()
            && amp_v.re.is_finite()
            && amp_v.im.is_finite())
        {
            return Err(Error::NonFinite {
                what: "state amplitude",
            });
        }
        let state = BiphotonState { amp_h, amp_v };
        let norm = state.norm_sqr();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        if norm > 1.0 + NORM_SLACK {
            return Err(Error::InvalidParameter {
                name: "squared norm",
                value: norm,
                expected: "a value in (0, 1]",
            });
        }
        Ok(state)
    }

    pub fn amp_h(&self) -> Complex64 {
        self.amp_h
    }

    pub fn amp_v(&self) -> Complex64 {
        self.amp_v
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp_h.norm_sqr() + self.amp_v.norm_sqr()
    }

    pub fn modulus_h(&self) -> f64 {
        libm::hypot(self.amp_h.re, self.amp_h.im)
    }

    pub fn modulus_v(&self) -> f64 {
        libm::hypot(self.amp_v.re, self.amp_v.im)
    }

    /// `arg(amp_v) − arg(amp_h)`, in `(−2π, 2π)`.
    pub fn relative_phase(&self) -> f64 {
        libm::atan2(self.amp_v.im, self.amp_v.re) - libm::atan2(self.amp_h.im, self.amp_h.re)
    }

    fn nonzero_norm(&self) -> Result<f64> {
        let norm = self.norm_sqr();
        if norm > 0.0 {
            Ok(norm)
        } else {
            Err(Error::ZeroNorm)
        }
    }

    /// The state after an analyzer on the signal arm only.
    pub fn through_signal(&self, theta: Angle) -> Self {
        BiphotonState {
            amp_h: self.amp_h * theta.cos(),
            amp_v: self.amp_v * theta.sin(),
        }
    }

    /// The state after an analyzer on the idler arm only.
    pub fn through_idler(&self, theta: Angle) -> Self {
        // Each photon of a pair crosses one analyzer, so both arms act on the
        // pair amplitude the same way.
        self.through_signal(theta)
    }
}

/// Orientations of the two linear analyzers, one per detection arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerPair {
    pub theta_signal: Angle,
    pub theta_idler: Angle,
}

impl AnalyzerPair {
    pub fn new(theta_signal: Angle, theta_idler: Angle) -> Self {
        AnalyzerPair {
            theta_signal,
            theta_idler,
        }
    }

    /// Both analyzers at the same angle, as in the experiment.
    pub fn equal(theta: Angle) -> Self {
        AnalyzerPair::new(theta, theta)
    }
}

/// Unnormalized post-analyzer state with its post-selection probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteredState {
    pub state: BiphotonState,
    /// Squared norm of `state` over the squared norm of the input.
    pub yield_probability: f64,
}

/// `cos θ_P |2_H,0_V⟩ + sin θ_P e^{iφ} |0_H,2_V⟩`.
pub fn prepare_state(theta_p: Angle, phi: Angle) -> BiphotonState {
    let (s, c) = (theta_p.sin(), theta_p.cos());
    BiphotonState {
        amp_h: Complex64::new(c, 0.0),
        amp_v: Complex64::new(s * phi.cos(), s * phi.sin()),
    }
}

pub fn project_analyzers(state: &BiphotonState, analyzers: AnalyzerPair) -> Result<FilteredState> {
    let norm_in = state.nonzero_norm()?;
    let out = state
        .through_signal(analyzers.theta_signal)
        .through_idler(analyzers.theta_idler);
    Ok(FilteredState {
        yield_probability: out.norm_sqr() / norm_in,
        state: out,
    })
}

pub fn renormalize(state: &BiphotonState) -> Result<BiphotonState> {
    let norm = state.nonzero_norm()?;
    let scale = 1.0 / libm::sqrt(norm);
    Ok(BiphotonState {
        amp_h: state.amp_h * scale,
        amp_v: state.amp_v * scale,
    })
}

fn balance(state: &BiphotonState) -> Result<f64> {
    let norm = state.nonzero_norm()?;
    let c = 2.0 * state.modulus_h() * state.modulus_v() / norm;
    Ok(c.min(1.0))
}

/// Concurrence `2|amp_h||amp_v| / (|amp_h|² + |amp_v|²)`.
pub fn concurrence(state: &BiphotonState) -> Result<f64> {
    balance(state)
}

/// Contrast of the coincidence fringe `|a|² + |b|² + 2|a||b| cos φ`.
///
/// For this two-term family it coincides with [`concurrence`].
pub fn ideal_visibility(state: &BiphotonState) -> Result<f64> {
    balance(state)
}

/// Analyzer angle that equalizes the two filtered amplitudes,
/// `cos θ_P cos²θ_A = sin θ_P sin²θ_A`.
///
/// Returns the unique root in `(0°, 90°)`, `arctan √(cot θ_P)`. Pump angles
/// outside the open interval describe product states (or wrap around) and
/// are rejected.
pub fn distillation_angle(theta_p: Angle) -> Result<Angle> {
    let tp = theta_p.radians();
    if !(tp > 0.0 && tp < FRAC_PI_2) {
        return Err(Error::Domain {
            what: "pump angle",
            value: theta_p.degrees(),
            domain: "(0°, 90°)",
        });
    }
    let cot = theta_p.cos() / theta_p.sin();
    Ok(Angle::from_radians_unchecked(libm::atan(libm::sqrt(cot))))
}

/// Signed residual `cos θ_P cos²θ_A − sin θ_P sin²θ_A`.
pub fn balance_residual(theta_p: Angle, theta_a: Angle) -> f64 {
    let (ca, sa) = (theta_a.cos(), theta_a.sin());
    theta_p.cos() * ca * ca - theta_p.sin() * sa * sa
}
