//! Model of a two-crystal parametric down-conversion source whose photon
//! pairs are entangled in birth position and polarization.
//!
//! The crate is `no_std` (it needs `alloc`) and is organized bottom-up:
//!
//! * [`angle`] and [`state`]: exact two-level state algebra, analyzer
//!   projection and the closed-form analyzer angle that balances the two
//!   pair amplitudes.
//! * [`apparatus`]: phenomenological bench model (detector position to phase,
//!   finite slit averaging, mode overlap, mean coincidence rates).
//! * [`experiment`]: seeded Poisson fringe scans, linear least-squares
//!   visibility fits, period estimation and parametric bootstrap errors.
//! * [`distill`]: analyzer-angle search, both against the analytic visibility
//!   curve and against fitted visibilities when the input state is unknown.
//!
//! Everything is a pure function of its inputs. Randomness only enters
//! through explicit 64-bit seeds.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod angle;
pub mod apparatus;
pub mod distill;
mod error;
pub mod experiment;
mod golden;
mod linalg;
mod rng;
pub mod state;

pub use angle::Angle;
pub use apparatus::{
    effective_visibility, expected_coincidence_rate, phase_at, slit_visibility_factor,
    ApparatusModel, FringeModel, Geometry, GeometryWarning,
};
pub use distill::{
    default_grid, distill_unknown, refine_angle, scan_analyzers, scan_analyzers_analytic,
    DistillReport, GridPoint, RefineStatus, RefinedAngle,
};
pub use error::{Error, Result};
pub use experiment::{
    bootstrap_error, estimate_period, estimate_period_from, fit_fringes, fit_sinusoid, run_scan,
    FringeDataset, FringePoint, RunSettings, ScanConfig, VisibilityEstimate,
};
pub use rng::child_seed;
pub use state::{
    balance_residual, concurrence, distillation_angle, ideal_visibility, prepare_state,
    project_analyzers, renormalize, AnalyzerPair, BiphotonState, FilteredState,
};
