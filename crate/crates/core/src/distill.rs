//! Analyzer-angle search.
//!
//! Both analyzers are rotated together and the fringe visibility is
//! maximized. When the pump angle is known the fitted grid is complemented by
//! a golden-section search on the analytic visibility curve. When it is not,
//! only fitted visibilities are used: a coarse grid followed by successive
//! three-point parabolic steps.

use alloc::vec::Vec;

use crate::apparatus::{effective_visibility, FringeModel};
use crate::experiment::{fit_fringes, run_scan};
use crate::state::{
    balance_residual, distillation_angle, prepare_state, project_analyzers, renormalize,
};
use crate::{
    golden, rng, AnalyzerPair, Angle, ApparatusModel, Error, Geometry, Result, RunSettings,
    ScanConfig, VisibilityEstimate,
};

/// Default refinement tolerance for [`distill_unknown`], in degrees.
pub const DEFAULT_REFINE_TOL_DEG: f64 = 1.0;

/// Most parabolic steps taken by [`distill_unknown`].
const MAX_PARABOLIC_STEPS: usize = 8;

/// Visibility differences below this are treated as a flat objective.
const FLAT_TOL: f64 = 1e-12;

/// Default coarse grid, 5° to 85° in 5° steps.
pub fn default_grid() -> Vec<f64> {
    (1..=17).map(|i| 5.0 * i as f64).collect()
}

/// One analyzer setting of a search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub theta_a_deg: f64,
    /// `None` when the scan or fit at this setting failed.
    pub estimate: Option<VisibilityEstimate>,
    /// Post-selection probability, when the input state is known.
    pub yield_probability: Option<f64>,
}

impl GridPoint {
    pub fn v_hat(&self) -> Option<f64> {
        self.estimate.map(|e| e.v_hat)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistillReport {
    /// Every evaluated setting, sorted by angle.
    pub grid: Vec<GridPoint>,
    /// Grid setting with the largest fitted visibility; ties go to the smaller angle.
    pub best_theta_a_deg: f64,
    pub best_v: f64,
    /// Off-grid optimum from the refinement step, if one was made.
    pub refined_theta_a_deg: Option<f64>,
    /// Closed-form balancing angle, when the pump angle is known and admits one.
    pub analytic_theta_a_deg: Option<f64>,
    /// Balance residual at the best grid angle, when the pump angle is known.
    pub balance_residual_at_best: Option<f64>,
    /// All valid grid visibilities were equal.
    pub flat: bool,
}

impl DistillReport {
    /// The refined angle when available, otherwise the best grid angle.
    pub fn recommended_theta_a_deg(&self) -> f64 {
        self.refined_theta_a_deg.unwrap_or(self.best_theta_a_deg)
    }

    fn assemble(mut grid: Vec<GridPoint>) -> Result<Self> {
        grid.sort_by(|a, b| a.theta_a_deg.total_cmp(&b.theta_a_deg));
        let mut best: Option<(f64, f64)> = None;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &grid {
            if let Some(v) = p.v_hat() {
                lo = lo.min(v);
                hi = hi.max(v);
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((p.theta_a_deg, v));
                }
            }
        }
        let (best_theta_a_deg, best_v) = best.ok_or(Error::AllPointsFailed)?;
        Ok(DistillReport {
            grid,
            best_theta_a_deg,
            best_v,
            refined_theta_a_deg: None,
            analytic_theta_a_deg: None,
            balance_residual_at_best: None,
            flat: hi - lo <= FLAT_TOL,
        })
    }

    fn with_known_pump(mut self, theta_p: Angle) -> Result<Self> {
        self.analytic_theta_a_deg = distillation_angle(theta_p).ok().map(Angle::degrees);
        self.balance_residual_at_best = Some(balance_residual(
            theta_p,
            Angle::from_degrees(self.best_theta_a_deg)?,
        ));
        Ok(self)
    }
}

fn check_grid(grid_deg: &[f64]) -> Result<()> {
    if grid_deg.is_empty() {
        return Err(Error::EmptyGrid);
    }
    match grid_deg.iter().find(|&&t| !(t > 0.0 && t < 90.0)) {
        Some(&t) => Err(Error::Domain {
            what: "analyzer angle",
            value: t,
            domain: "(0°, 90°)",
        }),
        None => Ok(()),
    }
}

fn sorted(grid_deg: &[f64]) -> Vec<f64> {
    let mut g = grid_deg.to_vec();
    g.sort_by(f64::total_cmp);
    g
}

/// Simulated analyzer search with the pump angle known.
///
/// Runs one seeded scan and fit per grid angle (both arms equal). Grid point
/// `i`, in ascending angle order, uses the `i`-th child seed of `scan.seed`.
/// A failed scan or fit marks that point invalid; the search fails only when
/// every point does.
pub fn scan_analyzers(
    theta_p_deg: f64,
    apparatus: &ApparatusModel,
    geometry: &Geometry,
    scan: &ScanConfig,
    grid_deg: &[f64],
) -> Result<DistillReport> {
    check_grid(grid_deg)?;
    let theta_p = Angle::from_degrees(theta_p_deg)?;
    apparatus.validate()?;
    geometry.validate()?;
    scan.validate()?;

    let points = sorted(grid_deg)
        .into_iter()
        .enumerate()
        .map(|(i, theta_a_deg)| {
            let settings = RunSettings::new(
                theta_p_deg,
                theta_a_deg,
                *apparatus,
                *geometry,
                ScanConfig {
                    seed: rng::child_seed(scan.seed, i as u64),
                    ..*scan
                },
            );
            let model = settings.fringe_model()?;
            let estimate = run_scan(&settings)
                .and_then(|d| fit_fringes(&d, geometry.fringe_period_mm))
                .ok();
            Ok(GridPoint {
                theta_a_deg,
                estimate,
                yield_probability: Some(model.yield_probability),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = DistillReport::assemble(points)?.with_known_pump(theta_p)?;
    let (lo, hi) = (
        report.grid[0].theta_a_deg,
        report.grid[report.grid.len() - 1].theta_a_deg,
    );
    if hi > lo {
        let refined = refine_angle(
            theta_p,
            apparatus,
            geometry,
            Angle::from_degrees(lo)?,
            Angle::from_degrees(hi)?,
            Angle::from_degrees(1e-6)?,
        )?;
        report.refined_theta_a_deg = Some(refined.angle.degrees());
    }
    Ok(report)
}

/// Noise-free counterpart of [`scan_analyzers`]: each grid point carries the
/// analytic effective visibility with zero standard error.
pub fn scan_analyzers_analytic(
    theta_p_deg: f64,
    apparatus: &ApparatusModel,
    geometry: &Geometry,
    grid_deg: &[f64],
) -> Result<DistillReport> {
    check_grid(grid_deg)?;
    let theta_p = Angle::from_degrees(theta_p_deg)?;
    let state = prepare_state(theta_p, Angle::ZERO);
    let points = sorted(grid_deg)
        .into_iter()
        .map(|theta_a_deg| {
            let analyzers = AnalyzerPair::equal(Angle::from_degrees(theta_a_deg)?);
            let model = FringeModel::new(&state, analyzers, apparatus, geometry)?;
            Ok(GridPoint {
                theta_a_deg,
                estimate: Some(VisibilityEstimate {
                    v_hat: model.visibility,
                    std_err: 0.0,
                    mean_level: model.signal_counts + model.background_counts,
                    phase_offset_rad: geometry.phase_offset_rad + model.state_phase,
                    residual_sum_squares: 0.0,
                    above_unity: false,
                }),
                yield_probability: Some(model.yield_probability),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DistillReport::assemble(points)?.with_known_pump(theta_p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineStatus {
    Interior,
    /// The maximum sits on the lower end of the bracket; the optimum is
    /// probably below it.
    AtLowerBound,
    AtUpperBound,
    /// The objective did not vary over the bracket.
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedAngle {
    pub angle: Angle,
    pub visibility: f64,
    pub status: RefineStatus,
}

/// Golden-section maximization of the analytic effective visibility of the
/// filtered state over the analyzer bracket `[lo, hi]`.
pub fn refine_angle(
    theta_p: Angle,
    apparatus: &ApparatusModel,
    geometry: &Geometry,
    lo: Angle,
    hi: Angle,
    tol: Angle,
) -> Result<RefinedAngle> {
    let quarter = core::f64::consts::FRAC_PI_2;
    let (a, b) = (lo.radians(), hi.radians());
    if !(a > 0.0 && a < b && b < quarter) {
        return Err(Error::Domain {
            what: "analyzer bracket",
            value: lo.degrees(),
            domain: "0° < lo < hi < 90°",
        });
    }
    if !(tol.radians() > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol.degrees(),
            expected: "> 0",
        });
    }
    apparatus.validate()?;
    geometry.validate()?;

    let state = prepare_state(theta_p, Angle::ZERO);
    let objective = |theta: f64| -> f64 {
        let analyzers = AnalyzerPair::equal(Angle::from_radians_unchecked(theta));
        project_analyzers(&state, analyzers)
            .and_then(|f| renormalize(&f.state))
            .and_then(|s| effective_visibility(&s, apparatus, geometry))
            .unwrap_or(0.0)
    };

    let (f_lo, f_hi, f_mid) = (objective(a), objective(b), objective(0.5 * (a + b)));
    if (f_lo - f_hi).abs() <= FLAT_TOL && (f_lo - f_mid).abs() <= FLAT_TOL {
        return Ok(RefinedAngle {
            angle: lo,
            visibility: f_lo,
            status: RefineStatus::Flat,
        });
    }

    let tol_rad = tol.radians();
    let (x, fx) = golden::maximize(objective, a, b, tol_rad);
    let status = match (x - a <= tol_rad, b - x <= tol_rad) {
        (true, _) => RefineStatus::AtLowerBound,
        (_, true) => RefineStatus::AtUpperBound,
        _ => RefineStatus::Interior,
    };
    let x = match status {
        RefineStatus::AtLowerBound => a,
        RefineStatus::AtUpperBound => b,
        _ => x,
    };
    Ok(RefinedAngle {
        angle: Angle::from_radians(x)?,
        visibility: fx,
        status,
    })
}

/// Vertex of the parabola through three points with `x0 < x1 < x2`, or
/// `None` when the points are not strictly concave.
fn concave_vertex((x0, y0): (f64, f64), (x1, y1): (f64, f64), (x2, y2): (f64, f64)) -> Option<f64> {
    let second = ((y2 - y1) / (x2 - x1) - (y1 - y0) / (x1 - x0)) / (x2 - x0);
    if !(second < 0.0) {
        return None;
    }
    let num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    let v = x1 - 0.5 * num / den;
    v.is_finite().then(|| v.clamp(x0, x2))
}

/// Analyzer search that never looks at the pump angle.
///
/// `measure` returns the fitted visibility for a requested analyzer angle in
/// degrees. The coarse grid is scanned first; around its argmax a parabola
/// through the two neighbours gives the next centre, and the stencil is
/// halved and re-measured until its half-width drops below `refine_tol_deg`.
pub fn distill_unknown<F>(
    mut measure: F,
    grid_deg: &[f64],
    refine_tol_deg: f64,
) -> Result<DistillReport>
where
    F: FnMut(f64) -> Result<VisibilityEstimate>,
{
    check_grid(grid_deg)?;
    if !(refine_tol_deg > 0.0) {
        return Err(Error::InvalidParameter {
            name: "refine_tol",
            value: refine_tol_deg,
            expected: "> 0",
        });
    }
    let mut evaluate = |theta_a_deg: f64| GridPoint {
        theta_a_deg,
        estimate: measure(theta_a_deg).ok(),
        yield_probability: None,
    };

    let coarse: Vec<GridPoint> = sorted(grid_deg).into_iter().map(&mut evaluate).collect();
    let report = DistillReport::assemble(coarse.clone())?;
    if report.flat {
        return Ok(report);
    }

    let valid: Vec<(f64, f64)> = coarse
        .iter()
        .filter_map(|p| p.v_hat().map(|v| (p.theta_a_deg, v)))
        .collect();
    let best = valid
        .iter()
        .position(|&(t, _)| t == report.best_theta_a_deg)
        .unwrap_or(0);
    let mut extra = Vec::new();
    let mut refined = report.best_theta_a_deg;
    if best > 0 && best + 1 < valid.len() {
        let mut stencil = [valid[best - 1], valid[best], valid[best + 1]];
        for _ in 0..MAX_PARABOLIC_STEPS {
            let Some(vertex) = concave_vertex(stencil[0], stencil[1], stencil[2]) else {
                break;
            };
            refined = vertex;
            let half = 0.5 * (stencil[1].0 - stencil[0].0).max(stencil[2].0 - stencil[1].0);
            if half < refine_tol_deg {
                break;
            }
            let lo = (vertex - half).max(1e-6);
            let hi = (vertex + half).min(89.999_999);
            let mut next = [(0.0, 0.0); 3];
            let mut complete = true;
            for (slot, t) in next.iter_mut().zip([lo, vertex, hi]) {
                let p = evaluate(t);
                extra.push(p);
                match p.v_hat() {
                    Some(v) => *slot = (t, v),
                    None => complete = false,
                }
            }
            if !complete || !(lo < vertex && vertex < hi) {
                break;
            }
            stencil = next;
        }
    }

    let mut grid = coarse;
    grid.extend(extra);
    let mut out = DistillReport::assemble(grid)?;
    out.refined_theta_a_deg = Some(refined);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(d: f64) -> Angle {
        Angle::from_degrees(d).unwrap()
    }

    fn bench(gamma: f64) -> (ApparatusModel, Geometry) {
        (
            ApparatusModel {
                gamma_mode_overlap: gamma,
                ..ApparatusModel::default()
            },
            Geometry::default(),
        )
    }

    #[test]
    fn grid_validation() {
        let (a, g) = bench(0.8);
        let s = ScanConfig::default();
        assert_eq!(scan_analyzers(22.5, &a, &g, &s, &[]), Err(Error::EmptyGrid));
        assert!(matches!(
            scan_analyzers(22.5, &a, &g, &s, &[45.0, 90.0]),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            scan_analyzers_analytic(22.5, &a, &g, &[0.0]),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn analytic_dense_grid_peaks_at_57() {
        let (a, g) = bench(0.8);
        let grid: Vec<f64> = (1..90).map(f64::from).collect();
        let r = scan_analyzers_analytic(22.5, &a, &g, &grid).unwrap();
        assert_eq!(r.best_theta_a_deg, 57.0);
        assert!((r.analytic_theta_a_deg.unwrap() - 57.234_900_260_351_1).abs() < 1e-9);
    }

    #[test]
    fn ties_go_to_smaller_angle() {
        let point = |t: f64| GridPoint {
            theta_a_deg: t,
            estimate: Some(estimate(0.7)),
            yield_probability: None,
        };
        let r = DistillReport::assemble(alloc::vec![point(50.0), point(40.0)]).unwrap();
        assert_eq!(r.grid[0].theta_a_deg, 40.0);
        assert_eq!(r.best_theta_a_deg, 40.0);
        assert!(r.flat);
    }

    #[test]
    fn single_point_grid() {
        let (a, g) = bench(0.8);
        let r = scan_analyzers(45.0, &a, &g, &ScanConfig::default(), &[45.0]).unwrap();
        assert_eq!(r.grid.len(), 1);
        assert_eq!(r.best_theta_a_deg, 45.0);
        assert!(r.refined_theta_a_deg.is_none());
        let expected = 0.8 * crate::apparatus::slit_visibility_factor(&g);
        let se = r.grid[0].estimate.unwrap().std_err;
        assert!(
            (r.best_v - expected).abs() < 4.0 * se,
            "{} vs {expected}",
            r.best_v
        );
    }

    #[test]
    fn failing_points_are_marked_not_fatal() {
        let (mut a, g) = bench(0.8);
        a.pair_rate_hz = 0.0;
        let r = scan_analyzers(22.5, &a, &g, &ScanConfig::default(), &[45.0, 57.0]);
        assert_eq!(r, Err(Error::AllPointsFailed));

        let mut calls = 0;
        let r = distill_unknown(
            |t| {
                calls += 1;
                if t < 40.0 {
                    Err(Error::IllConditioned)
                } else {
                    Ok(estimate(1.0 - (t - 50.0) * (t - 50.0) / 1e4))
                }
            },
            &[20.0, 30.0, 40.0, 50.0, 60.0],
            1.0,
        )
        .unwrap();
        assert!(calls > 5);
        assert!(r.grid.iter().any(|p| p.estimate.is_none()));
        assert!((r.recommended_theta_a_deg() - 50.0).abs() < 1e-6);
    }

    #[test]
    fn yields_match_projection() {
        let (a, g) = bench(0.8);
        let r = scan_analyzers(22.5, &a, &g, &ScanConfig::default(), &[55.0, 57.0, 59.0]).unwrap();
        for p in &r.grid {
            let f = project_analyzers(
                &prepare_state(deg(22.5), Angle::ZERO),
                AnalyzerPair::equal(deg(p.theta_a_deg)),
            )
            .unwrap();
            assert!((p.yield_probability.unwrap() - f.yield_probability).abs() < 1e-12);
        }
        assert!(r.balance_residual_at_best.is_some());
    }

    #[test]
    fn refine_examples() {
        let (a, g) = bench(0.8);
        let r = refine_angle(deg(22.5), &a, &g, deg(40.0), deg(70.0), deg(1e-4)).unwrap();
        assert_eq!(r.status, RefineStatus::Interior);
        assert!((r.angle.degrees() - 57.234_900_260_351_1).abs() < 1e-4);
        let r = refine_angle(deg(45.0), &a, &g, deg(30.0), deg(60.0), deg(1e-4)).unwrap();
        assert!((r.angle.degrees() - 45.0).abs() < 1e-4);
        let r = refine_angle(deg(10.0), &a, &g, deg(50.0), deg(80.0), deg(1e-4)).unwrap();
        assert!((r.angle.degrees() - 67.221_828_596_332_32).abs() < 1e-4);
        assert!((r.angle.degrees() - 67.0).abs() < 0.5);
    }

    #[test]
    fn refine_flags_bracket_without_optimum() {
        let (a, g) = bench(0.8);
        let r = refine_angle(deg(22.5), &a, &g, deg(20.0), deg(40.0), deg(1e-4)).unwrap();
        assert_eq!(r.status, RefineStatus::AtUpperBound);
        assert_eq!(r.angle.degrees(), deg(40.0).degrees());
        let r = refine_angle(deg(22.5), &a, &g, deg(60.0), deg(80.0), deg(1e-4)).unwrap();
        assert_eq!(r.status, RefineStatus::AtLowerBound);
        let (a0, _) = bench(0.0);
        let r = refine_angle(deg(22.5), &a0, &g, deg(40.0), deg(70.0), deg(1e-4)).unwrap();
        assert_eq!(r.status, RefineStatus::Flat);
        assert!(refine_angle(deg(22.5), &a, &g, deg(70.0), deg(40.0), deg(1e-4)).is_err());
        assert!(refine_angle(deg(22.5), &a, &g, deg(0.0), deg(40.0), deg(1e-4)).is_err());
    }

    #[test]
    fn refine_agrees_with_closed_form() {
        let (a, g) = bench(0.8);
        for i in 1..=17 {
            let tp = 5.0 * i as f64;
            let want = distillation_angle(deg(tp)).unwrap().degrees();
            let got = refine_angle(deg(tp), &a, &g, deg(1.0), deg(89.0), deg(1e-6)).unwrap();
            assert!(
                (got.angle.degrees() - want).abs() < 1e-4,
                "{tp}: {} vs {want}",
                got.angle
            );
        }
    }

    #[test]
    fn distillation_never_lowers_ideal_visibility() {
        for i in 1..90 {
            let tp = deg(i as f64);
            let s = prepare_state(tp, Angle::ZERO);
            let v = |ta: Angle| {
                let f = project_analyzers(&s, AnalyzerPair::equal(ta)).unwrap();
                crate::state::ideal_visibility(&f.state).unwrap()
            };
            let best = distillation_angle(tp).unwrap();
            assert!(v(best) >= v(deg(45.0)) - 1e-12);
        }
    }

    fn estimate(v: f64) -> VisibilityEstimate {
        VisibilityEstimate {
            v_hat: v,
            std_err: 0.0,
            mean_level: 1.0,
            phase_offset_rad: 0.0,
            residual_sum_squares: 0.0,
            above_unity: false,
        }
    }

    #[test]
    fn unknown_flat_objective() {
        let r = distill_unknown(|_| Ok(estimate(0.4)), &default_grid(), 1.0).unwrap();
        assert!(r.flat);
        assert_eq!(r.best_theta_a_deg, 5.0);
        assert!(r.refined_theta_a_deg.is_none());
    }

    #[test]
    fn unknown_follows_analytic_curve() {
        let (a, g) = bench(0.8);
        for tp in [10.0, 22.5, 30.0, 45.0, 70.0] {
            let r = distill_unknown(
                |t| {
                    let rep = scan_analyzers_analytic(tp, &a, &g, &[t])?;
                    Ok(rep.grid[0].estimate.unwrap())
                },
                &default_grid(),
                0.01,
            )
            .unwrap();
            let want = distillation_angle(deg(tp)).unwrap().degrees();
            assert!(
                (r.recommended_theta_a_deg() - want).abs() < 0.1,
                "{tp}: {r:?}"
            );
            assert!(r.analytic_theta_a_deg.is_none());
            assert!(r.balance_residual_at_best.is_none());
        }
    }

    #[test]
    fn unknown_all_failures() {
        let r = distill_unknown(|_| Err(Error::NoPeriod), &[30.0, 40.0], 1.0);
        assert_eq!(r, Err(Error::AllPointsFailed));
        assert_eq!(
            distill_unknown(|_| Ok(estimate(1.0)), &[], 1.0),
            Err(Error::EmptyGrid)
        );
    }

    #[test]
    fn vertex_of_exact_parabola() {
        let f = |x: f64| -(x - 2.3) * (x - 2.3);
        let v = concave_vertex((1.0, f(1.0)), (2.0, f(2.0)), (4.0, f(4.0))).unwrap();
        assert!((v - 2.3).abs() < 1e-12);
        assert!(concave_vertex((0.0, 0.0), (1.0, 1.0), (2.0, 2.0)).is_none());
    }
}
