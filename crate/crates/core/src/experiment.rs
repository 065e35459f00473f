//! Seeded fringe scans and visibility recovery.
//!
//! A scan moves the signal detector across `n_points` evenly spaced
//! positions with the idler detector fixed, and draws Poisson coincidence
//! counts around the mean of the [`FringeModel`]. Visibility is recovered by
//! fitting `A + B cos kx + C sin kx` with the period known, which is a
//! linear least-squares problem.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand_distr::{Distribution, Poisson};

use crate::apparatus::FringeModel;
use crate::linalg::{self, Mat3};
use crate::state::prepare_state;
use crate::{rng, AnalyzerPair, Angle, ApparatusModel, Error, Geometry, Result};

/// Fewest scan positions accepted.
pub const MIN_POINTS: usize = 5;

/// Upper clamp for reported visibilities; noise can push the raw estimate past 1.
pub const MAX_REPORTED_VISIBILITY: f64 = 1.5;

/// Default number of bootstrap resamples.
pub const DEFAULT_RESAMPLES: usize = 200;

const SINGULAR_TOL: f64 = 1e-9;
const BOOTSTRAP_SALT: u64 = 0xb007_5742_a5e5_0001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub x_start_mm: f64,
    pub x_end_mm: f64,
    pub n_points: usize,
    pub seed: u64,
}

impl Default for ScanConfig {
    /// 40 points over two periods of the default 2 mm fringe.
    fn default() -> Self {
        ScanConfig {
            x_start_mm: 0.0,
            x_end_mm: 4.0,
            n_points: 40,
            seed: 1,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("x_start_mm", self.x_start_mm), ("x_end_mm", self.x_end_mm)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    expected: "a finite value",
                });
            }
        }
        if self.x_end_mm <= self.x_start_mm {
            return Err(Error::InvalidParameter {
                name: "x_end_mm",
                value: self.x_end_mm,
                expected: "a value greater than x_start_mm",
            });
        }
        if self.n_points < MIN_POINTS {
            return Err(Error::TooFewPoints {
                min: MIN_POINTS,
                got: self.n_points,
            });
        }
        Ok(())
    }

    pub fn span_mm(&self) -> f64 {
        self.x_end_mm - self.x_start_mm
    }

    /// True when the scan covers less than one fringe, which leaves the fit
    /// poorly conditioned.
    pub fn is_short_for(&self, period_mm: f64) -> bool {
        self.span_mm() < period_mm
    }

    /// Evenly spaced positions, both endpoints included.
    pub fn positions(&self) -> Vec<f64> {
        let last = (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| {
                if i + 1 == self.n_points {
                    self.x_end_mm
                } else {
                    self.x_start_mm + self.span_mm() * (i as f64 / last)
                }
            })
            .collect()
    }
}

/// Everything needed to regenerate a scan bit for bit.
///
/// Angles are kept in the degrees the caller supplied, so that a dataset
/// written to text and read back regenerates the same counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub theta_p_deg: f64,
    /// Relative phase of the prepared state.
    pub phi_deg: f64,
    pub theta_signal_deg: f64,
    pub theta_idler_deg: f64,
    pub apparatus: ApparatusModel,
    pub geometry: Geometry,
    pub scan: ScanConfig,
}

impl RunSettings {
    /// Settings with both analyzers at `theta_a_deg` and zero state phase.
    pub fn new(
        theta_p_deg: f64,
        theta_a_deg: f64,
        apparatus: ApparatusModel,
        geometry: Geometry,
        scan: ScanConfig,
    ) -> Self {
        RunSettings {
            theta_p_deg,
            phi_deg: 0.0,
            theta_signal_deg: theta_a_deg,
            theta_idler_deg: theta_a_deg,
            apparatus,
            geometry,
            scan,
        }
    }

    pub fn theta_p(&self) -> Result<Angle> {
        Angle::from_degrees(self.theta_p_deg)
    }

    pub fn analyzers(&self) -> Result<AnalyzerPair> {
        Ok(AnalyzerPair::new(
            Angle::from_degrees(self.theta_signal_deg)?,
            Angle::from_degrees(self.theta_idler_deg)?,
        ))
    }

    pub fn validate(&self) -> Result<()> {
        self.theta_p()?;
        Angle::from_degrees(self.phi_deg)?;
        self.analyzers()?;
        self.apparatus.validate()?;
        self.geometry.validate()?;
        self.scan.validate()
    }

    pub fn fringe_model(&self) -> Result<FringeModel> {
        let state = prepare_state(self.theta_p()?, Angle::from_degrees(self.phi_deg)?);
        FringeModel::new(&state, self.analyzers()?, &self.apparatus, &self.geometry)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringePoint {
    pub x_mm: f64,
    pub counts: u64,
}

/// Coincidence counts along one detector scan, with the settings that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeDataset {
    points: Vec<FringePoint>,
    pub settings: RunSettings,
}

impl FringeDataset {
    /// Wraps externally obtained points; positions must be finite and strictly
    /// increasing.
    pub fn new(points: Vec<FringePoint>, settings: RunSettings) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !p.x_mm.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "x_mm",
                value: p.x_mm,
                expected: "a finite position",
            });
        }
        if let Some(w) = points.windows(2).find(|w| w[1].x_mm <= w[0].x_mm) {
            return Err(Error::InvalidParameter {
                name: "x_mm",
                value: w[1].x_mm,
                expected: "strictly increasing positions",
            });
        }
        Ok(FringeDataset { points, settings })
    }

    pub fn points(&self) -> &[FringePoint] {
        &self.points
    }

    pub fn positions(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x_mm).collect()
    }

    pub fn counts(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.counts as f64).collect()
    }

    pub fn total_counts(&self) -> u64 {
        self.points.iter().map(|p| p.counts).sum()
    }
}

fn draw_poisson<R: rand::Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if !mean.is_finite() || mean > Poisson::<f64>::MAX_LAMBDA {
        return Err(Error::RateOverflow { mean });
    }
    if mean <= 0.0 {
        return Ok(0);
    }
    let poisson = Poisson::new(mean).map_err(|_| Error::RateOverflow { mean })?;
    Ok(poisson.sample(rng) as u64)
}

/// Runs one seeded scan.
///
/// Each position `i` draws from its own random stream, `(seed, i)`, so the
/// counts do not depend on how the positions are scheduled.
pub fn run_scan(settings: &RunSettings) -> Result<FringeDataset> {
    settings.validate()?;
    let model = settings.fringe_model()?;
    let points = settings
        .scan
        .positions()
        .into_iter()
        .enumerate()
        .map(|(i, x_mm)| {
            let mean = model.mean_at(x_mm)?;
            let mut rng = rng::stream(settings.scan.seed, i as u64);
            Ok(FringePoint {
                x_mm,
                counts: draw_poisson(mean, &mut rng)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FringeDataset::new(points, *settings)
}

/// Fitted fringe parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityEstimate {
    /// Fitted visibility, clamped to `[0, 1.5]`.
    pub v_hat: f64,
    /// Standard error from Poisson-weighted error propagation through the fit.
    pub std_err: f64,
    pub mean_level: f64,
    pub phase_offset_rad: f64,
    pub residual_sum_squares: f64,
    /// The unclamped estimate exceeded 1.
    pub above_unity: bool,
}

/// Raw linear fit of `A + B cos kx + C sin kx`.
#[derive(Debug, Clone, Copy)]
struct SinusoidFit {
    coef: [f64; 3],
    rss: f64,
    /// `(XᵀX)⁻¹`.
    normal_inverse: Mat3,
}

impl SinusoidFit {
    fn value_at(&self, k: f64, x: f64) -> f64 {
        let [a, b, c] = self.coef;
        a + b * libm::cos(k * x) + c * libm::sin(k * x)
    }
}

fn basis(k: f64, x: f64) -> [f64; 3] {
    [1.0, libm::cos(k * x), libm::sin(k * x)]
}

fn linear_fit(xs: &[f64], ys: &[f64], k: f64) -> Result<SinusoidFit> {
    let mut normal = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let f = basis(k, x);
        for i in 0..3 {
            rhs[i] += f[i] * y;
            for j in 0..3 {
                normal[i][j] += f[i] * f[j];
            }
        }
    }
    let normal_inverse = linalg::invert(&normal, SINGULAR_TOL).ok_or(Error::IllConditioned)?;
    let coef = linalg::mul_vec(&normal_inverse, &rhs);
    let mut fit = SinusoidFit {
        coef,
        rss: 0.0,
        normal_inverse,
    };
    fit.rss = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - fit.value_at(k, x);
            r * r
        })
        .sum();
    Ok(fit)
}

fn check_inputs(xs: &[f64], ys: &[f64], period_mm: f64) -> Result<()> {
    if !(period_mm.is_finite() && period_mm > 0.0) {
        return Err(Error::InvalidParameter {
            name: "period_mm",
            value: period_mm,
            expected: "> 0",
        });
    }
    debug_assert_eq!(xs.len(), ys.len());
    if xs.len() < MIN_POINTS {
        return Err(Error::TooFewPoints {
            min: MIN_POINTS,
            got: xs.len(),
        });
    }
    Ok(())
}

/// Least-squares fringe fit on arbitrary real-valued samples.
///
/// The reported `std_err` treats each sample as a Poisson count whose
/// variance equals its fitted mean.
pub fn fit_sinusoid(xs: &[f64], ys: &[f64], period_mm: f64) -> Result<VisibilityEstimate> {
    check_inputs(xs, ys, period_mm)?;
    let k = TAU / period_mm;
    let fit = linear_fit(xs, ys, k)?;
    let [a, b, c] = fit.coef;
    if !(a > 0.0) {
        return Err(Error::DegenerateData { mean_level: a });
    }
    let amplitude = libm::hypot(b, c);
    let raw = amplitude / a;

    // Sandwich covariance (XᵀX)⁻¹ Xᵀ diag(σ²) X (XᵀX)⁻¹ with σ² = fitted mean.
    let mut meat = [[0.0; 3]; 3];
    for &x in xs {
        let f = basis(k, x);
        let var = fit.value_at(k, x).max(0.0);
        for i in 0..3 {
            for j in 0..3 {
                meat[i][j] += var * f[i] * f[j];
            }
        }
    }
    let cov = linalg::mul(
        &linalg::mul(&fit.normal_inverse, &meat),
        &fit.normal_inverse,
    );
    let variance = if amplitude > 0.0 {
        // Gradient of √(B² + C²)/A with respect to (A, B, C).
        let g = [-raw / a, b / (a * amplitude), c / (a * amplitude)];
        let mut v = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                v += g[i] * cov[i][j] * g[j];
            }
        }
        v
    } else {
        (cov[1][1] + cov[2][2]) / (2.0 * a * a)
    };

    Ok(VisibilityEstimate {
        v_hat: raw.clamp(0.0, MAX_REPORTED_VISIBILITY),
        std_err: libm::sqrt(variance.max(0.0)),
        mean_level: a,
        phase_offset_rad: libm::atan2(-c, b),
        residual_sum_squares: fit.rss,
        above_unity: raw > 1.0,
    })
}

/// Fits a scan with the fringe period known.
pub fn fit_fringes(dataset: &FringeDataset, period_mm: f64) -> Result<VisibilityEstimate> {
    fit_sinusoid(&dataset.positions(), &dataset.counts(), period_mm)
}

/// Minimum F statistic for the best sinusoid to count as a detected fringe.
const PERIOD_F_THRESHOLD: f64 = 10.0;
/// Coarse grid spacing as a fraction of the spectral resolution `2π/span`.
const COARSE_STEPS_PER_BIN: f64 = 8.0;
const REFINE_PASSES: usize = 3;
const REFINE_HALF_WIDTH: usize = 8;

/// Explained-variance fraction of the sinusoid fit at wavenumber `k`.
fn explained(xs: &[f64], ys: &[f64], k: f64, tss: f64) -> f64 {
    match linear_fit(xs, ys, k) {
        Ok(fit) => 1.0 - fit.rss / tss,
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Vertex of the parabola through three equally spaced samples, as an
/// offset in units of the spacing, limited to the bracket.
fn parabola_vertex(left: f64, mid: f64, right: f64) -> f64 {
    let curvature = left - 2.0 * mid + right;
    if curvature < 0.0 {
        (0.5 * (left - right) / curvature).clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

/// Grid search over `[k_lo, k_hi]` with parabolic refinement at the best node.
fn refine_on_grid<F: Fn(f64) -> f64>(score: &F, k_lo: f64, k_hi: f64, step: f64) -> (f64, f64) {
    let n = libm::floor((k_hi - k_lo) / step) as usize + 1;
    let scores: Vec<f64> = (0..n).map(|i| score(k_lo + step * i as f64)).collect();
    let best = scores
        .iter()
        .enumerate()
        .fold(0, |b, (i, &s)| if s > scores[b] { i } else { b });
    let mut k = k_lo + step * best as f64;
    if best > 0 && best + 1 < n {
        k += step * parabola_vertex(scores[best - 1], scores[best], scores[best + 1]);
    }
    (k, scores[best])
}

/// Estimates the fringe period from raw samples.
pub fn estimate_period_from(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_inputs(xs, ys, 1.0)?;
    let n = xs.len();
    let mean = ys.iter().sum::<f64>() / n as f64;
    let tss: f64 = ys.iter().map(|y| (y - mean) * (y - mean)).sum();
    if !(tss > 0.0) {
        return Err(Error::NoPeriod);
    }
    let span = xs[n - 1] - xs[0];
    if !(span > 0.0) {
        return Err(Error::NoPeriod);
    }
    let resolution = TAU / span;
    let k_lo = resolution;
    let k_hi = core::f64::consts::PI * (n - 1) as f64 / span;
    if k_hi <= k_lo {
        return Err(Error::NoPeriod);
    }
    let score = |k: f64| explained(xs, ys, k, tss);

    let mut step = resolution / COARSE_STEPS_PER_BIN;
    let (mut k, _) = refine_on_grid(&score, k_lo, k_hi, step);
    for _ in 0..REFINE_PASSES {
        let half = step * 1.5;
        let lo = (k - half).max(k_lo);
        let hi = (k + half).min(k_hi);
        step = (hi - lo) / (2 * REFINE_HALF_WIDTH) as f64;
        if !(step > 0.0) {
            break;
        }
        k = refine_on_grid(&score, lo, hi, step).0;
    }

    let r2 = score(k);
    let dof = (n - 3) as f64;
    let f_stat = if r2 >= 1.0 {
        f64::INFINITY
    } else {
        (r2 / 2.0) / ((1.0 - r2) / dof)
    };
    if !(f_stat >= PERIOD_F_THRESHOLD) {
        return Err(Error::NoPeriod);
    }
    Ok(TAU / k)
}

/// Estimates the fringe period of a scan.
///
/// Needs at least two periods in the scan span to be reliable.
pub fn estimate_period(dataset: &FringeDataset) -> Result<f64> {
    estimate_period_from(&dataset.positions(), &dataset.counts())
}

/// Parametric bootstrap standard error of the fitted visibility.
///
/// Counts are redrawn from Poisson distributions centred on the fitted
/// fringe and refitted. Resample `r` uses stream `r` of a seed derived from
/// the dataset seed. Fewer than two resamples give zero.
pub fn bootstrap_error(dataset: &FringeDataset, period_mm: f64, n_resamples: usize) -> Result<f64> {
    let xs = dataset.positions();
    let ys = dataset.counts();
    fit_sinusoid(&xs, &ys, period_mm)?;
    if n_resamples < 2 {
        return Ok(0.0);
    }
    let k = TAU / period_mm;
    let fitted = linear_fit(&xs, &ys, k)?;
    let means: Vec<f64> = xs.iter().map(|&x| fitted.value_at(k, x).max(0.0)).collect();

    let seed = dataset.settings.scan.seed ^ BOOTSTRAP_SALT;
    let mut resample = alloc::vec![0.0; xs.len()];
    let mut estimates = Vec::with_capacity(n_resamples);
    for r in 0..n_resamples {
        let mut rng = rng::stream(seed, r as u64);
        for (slot, &m) in resample.iter_mut().zip(&means) {
            *slot = draw_poisson(m, &mut rng)? as f64;
        }
        if let Ok(est) = fit_sinusoid(&xs, &resample, period_mm) {
            estimates.push(est.v_hat);
        }
    }
    if estimates.len() < 2 {
        return Err(Error::BootstrapFailed {
            succeeded: estimates.len(),
            requested: n_resamples,
        });
    }
    let m = estimates.iter().sum::<f64>() / estimates.len() as f64;
    let var =
        estimates.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (estimates.len() - 1) as f64;
    Ok(libm::sqrt(var))
}
