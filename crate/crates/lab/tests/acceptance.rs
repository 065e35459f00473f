//! Acceptance suite. Prints one `PASS` or `FAIL` line per criterion and exits
//! non-zero if any criterion fails. Every tolerance is a named constant.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use biphoton::{
    balance_residual, bootstrap_error, child_seed, distillation_angle, effective_visibility,
    expected_coincidence_rate, fit_fringes, fit_sinusoid, ideal_visibility, prepare_state,
    project_analyzers, refine_angle, renormalize, run_scan, scan_analyzers, slit_visibility_factor,
    AnalyzerPair, Angle, ApparatusModel, Geometry, RunSettings, ScanConfig,
};
use biphoton_lab::dataset_csv::write_dataset;
use biphoton_lab::reproduce::{base_config, reproduce, write_table, DatasetId};

const ANGLE_TABLE_TOL_DEG: f64 = 0.5;
const GRID_TRIALS: u64 = 100;
const GRID_MIN_HITS: usize = 95;
const GRID_TIME_LIMIT: Duration = Duration::from_secs(30);
/// 10⁵ pairs per point at yield ≈ 0.15 gives ≈ 1.5·10⁴ counts per point.
const GRID_PAIR_RATE_HZ: f64 = 1.0e4;
const GRID_DWELL_S: f64 = 10.0;
const MAX_STATE_BOOT_SIGMAS: f64 = 3.0;
const MAX_STATE_SLIT0_TOL: f64 = 0.02;
const BOOT_RESAMPLES: usize = 400;
const ORDERING_PAIR_RATE_HZ: f64 = 1.0e5;
const MEASURED_TOL: f64 = 0.10;
const EXACTNESS_V_TOL: f64 = 1e-9;
const EXACTNESS_RESIDUAL_TOL: f64 = 1e-12;
const CONTRAST_TOL: f64 = 1e-9;
const SLIT_LIMIT_TOL: f64 = 1e-12;
const FIT_EXACT_REL_TOL: f64 = 1e-6;
const COVERAGE_TRIALS: u64 = 100;
const COVERAGE_MIN: usize = 90;
const ORACLE_TOL_DEG: f64 = 1e-4;
const PROPERTY_TIME_LIMIT: Duration = Duration::from_secs(120);

type Outcome = (bool, String);
type Check = (&'static str, fn() -> Outcome);

fn deg(d: f64) -> Angle {
    Angle::from_degrees(d).unwrap()
}

fn fitted(
    theta_p: f64,
    theta_a: f64,
    apparatus: ApparatusModel,
    geometry: Geometry,
    seed: u64,
) -> (f64, f64, biphoton::FringeDataset) {
    let s = RunSettings::new(
        theta_p,
        theta_a,
        apparatus,
        geometry,
        ScanConfig {
            seed,
            ..ScanConfig::default()
        },
    );
    let d = run_scan(&s).unwrap();
    let e = fit_fringes(&d, geometry.fringe_period_mm).unwrap();
    (e.v_hat, e.std_err, d)
}

fn angle_table() -> Outcome {
    let rows = [(22.5, 57.0), (10.0, 67.0), (20.0, 59.0), (30.0, 53.0)];
    let mut ok = true;
    let mut detail = Vec::new();
    for (tp, measured) in rows {
        let got = distillation_angle(deg(tp)).unwrap().degrees();
        ok &= (got - measured).abs() <= ANGLE_TABLE_TOL_DEG;
        detail.push(format!("{tp}°→{got:.4}° (measured {measured}°)"));
    }
    (ok, detail.join(", "))
}

fn grid_optimum() -> Outcome {
    let start = Instant::now();
    let apparatus = ApparatusModel {
        gamma_mode_overlap: 0.80,
        pair_rate_hz: GRID_PAIR_RATE_HZ,
        integration_time_s: GRID_DWELL_S,
        ..ApparatusModel::default()
    };
    let min_yield = [55.0, 57.0, 59.0]
        .iter()
        .map(|&a| {
            project_analyzers(
                &prepare_state(deg(22.5), Angle::ZERO),
                AnalyzerPair::equal(deg(a)),
            )
            .unwrap()
            .yield_probability
        })
        .fold(f64::INFINITY, f64::min);
    let min_counts = GRID_PAIR_RATE_HZ * GRID_DWELL_S * min_yield;
    let hits = (0..GRID_TRIALS)
        .filter(|&t| {
            let scan = ScanConfig {
                seed: child_seed(2024, t),
                ..ScanConfig::default()
            };
            let r = scan_analyzers(
                22.5,
                &apparatus,
                &Geometry::default(),
                &scan,
                &[55.0, 57.0, 59.0],
            )
            .unwrap();
            r.best_theta_a_deg == 57.0
        })
        .count();
    let elapsed = start.elapsed();
    (
        hits >= GRID_MIN_HITS && elapsed < GRID_TIME_LIMIT && min_counts >= 1e4,
        format!(
            "best=57° in {hits}/{GRID_TRIALS} trials (need {GRID_MIN_HITS}), {min_counts:.0} counts/point minimum, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn maximal_state() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (gamma, seed) in [(0.80, 31u64), (0.66, 32)] {
        let apparatus = ApparatusModel {
            gamma_mode_overlap: gamma,
            ..ApparatusModel::default()
        };
        let g = Geometry::default();
        let target = gamma * slit_visibility_factor(&g);
        let (v, _, d) = fitted(45.0, 45.0, apparatus, g, seed);
        let boot = bootstrap_error(&d, g.fringe_period_mm, BOOT_RESAMPLES).unwrap();
        let sigmas = (v - target).abs() / boot;
        ok &= sigmas <= MAX_STATE_BOOT_SIGMAS;
        detail.push(format!(
            "γ={gamma}: v̂={v:.4} vs {target:.4} ({sigmas:.2} boot σ)"
        ));

        let point = Geometry {
            slit_width_mm: 0.0,
            ..g
        };
        let (v0, _, _) = fitted(45.0, 45.0, apparatus, point, seed);
        ok &= (v0 - gamma).abs() <= MAX_STATE_SLIT0_TOL;
        detail.push(format!("slit 0: v̂={v0:.4}"));
    }
    (ok, detail.join(", "))
}

fn ordering() -> Outcome {
    let apparatus = ApparatusModel {
        gamma_mode_overlap: 0.80,
        pair_rate_hz: ORDERING_PAIR_RATE_HZ,
        ..ApparatusModel::default()
    };
    let g = Geometry {
        slit_width_mm: 0.0,
        ..Geometry::default()
    };
    let v = |a: f64, i: u64| fitted(22.5, a, apparatus, g, child_seed(4, i)).0;
    let (v45, v55, v57, v59) = (v(45.0, 0), v(55.0, 1), v(57.0, 2), v(59.0, 3));
    let ordered = v57 > v55 && v57 > v59 && v55 > v45 && v57 > v45 && v59 > v45;

    let model = |a: f64| {
        let f = project_analyzers(
            &prepare_state(deg(22.5), Angle::ZERO),
            AnalyzerPair::equal(deg(a)),
        )
        .unwrap();
        effective_visibility(&renormalize(&f.state).unwrap(), &apparatus, &g).unwrap()
    };
    let mut close = true;
    let mut diffs = Vec::new();
    for (a, measured, sim) in [(45.0, 0.50, v45), (55.0, 0.72, v55), (59.0, 0.70, v59)] {
        let m = model(a);
        close &= (m - measured).abs() <= MEASURED_TOL && (sim - measured).abs() <= MEASURED_TOL;
        diffs.push(format!(
            "{a}°: model {m:.3} sim {sim:.3} measured {measured}"
        ));
    }
    (
        ordered && close,
        format!(
            "V57={v57:.4} V55={v55:.4} V59={v59:.4} V45={v45:.4}; {}",
            diffs.join(", ")
        ),
    )
}

fn excluded_row() -> Outcome {
    let c = base_config();
    let rows = reproduce(DatasetId::Figs2To7, &c).unwrap();
    let table = write_table(DatasetId::Figs2To7, &c, &rows);
    let line = table
        .lines()
        .find(|l| l.starts_with("22.5,22.5,"))
        .unwrap_or("")
        .to_string();
    let only_one = rows.iter().filter(|r| r.status() == "excluded").count() == 1;
    (
        line.ends_with(",excluded") && only_one,
        format!("row: {line}"),
    )
}

fn distillation_exactness() -> Outcome {
    let mut worst_v: f64 = 0.0;
    let mut worst_r: f64 = 0.0;
    for i in 1..=89 {
        let tp = deg(i as f64);
        let ta = distillation_angle(tp).unwrap();
        let f =
            project_analyzers(&prepare_state(tp, Angle::ZERO), AnalyzerPair::equal(ta)).unwrap();
        worst_v = worst_v.max((ideal_visibility(&f.state).unwrap() - 1.0).abs());
        worst_r = worst_r.max(balance_residual(tp, ta).abs());
    }
    (
        worst_v <= EXACTNESS_V_TOL && worst_r < EXACTNESS_RESIDUAL_TOL,
        format!("max |V−1|={worst_v:.1e}, max |residual|={worst_r:.1e}"),
    )
}

fn contrast_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for (tp, ta) in [(45.0, 45.0), (22.5, 57.0), (22.5, 45.0), (10.0, 30.0)] {
        for slit in [0.0, 0.5, 1.3] {
            let g = Geometry {
                slit_width_mm: slit,
                ..Geometry::default()
            };
            let a = ApparatusModel::default();
            let s = prepare_state(deg(tp), Angle::ZERO);
            let an = AnalyzerPair::equal(deg(ta));
            let model = biphoton::FringeModel::new(&s, an, &a, &g).unwrap();
            let peak = -g.fringe_period_mm * model.state_phase / std::f64::consts::TAU;
            let hi = expected_coincidence_rate(&s, an, &a, &g, peak).unwrap();
            let lo =
                expected_coincidence_rate(&s, an, &a, &g, peak + g.fringe_period_mm / 2.0).unwrap();
            let f = project_analyzers(&s, an).unwrap();
            let v = effective_visibility(&renormalize(&f.state).unwrap(), &a, &g).unwrap();
            worst = worst.max(((hi - lo) / (hi + lo) - v).abs());
        }
    }
    (
        worst <= CONTRAST_TOL,
        format!("max |contrast − V_eff|={worst:.1e}"),
    )
}

fn slit_limits() -> Outcome {
    let g = |w: f64| Geometry {
        slit_width_mm: w,
        ..Geometry::default()
    };
    let zero = slit_visibility_factor(&g(0.0));
    let tiny = slit_visibility_factor(&g(1e-9));
    let full = slit_visibility_factor(&g(2.0));
    let ok = (zero - 1.0).abs() <= SLIT_LIMIT_TOL
        && (tiny - 1.0).abs() <= SLIT_LIMIT_TOL
        && full.abs() <= SLIT_LIMIT_TOL;
    (ok, format!("w=0: {zero}, w=1e-9: {tiny}, w=Λ: {full:.1e}"))
}

fn fit_exactness() -> Outcome {
    let xs: Vec<f64> = ScanConfig::default().positions();
    let mut worst: f64 = 0.0;
    for (a, v, phi0, period) in [
        (1000.0, 0.8, 0.3, 2.0),
        (55.5, 0.13, -2.0, 1.7),
        (1e5, 0.999, 1.0, 3.1),
    ] {
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| a * (1.0 + v * (std::f64::consts::TAU * x / period + phi0).cos()))
            .collect();
        let e = fit_sinusoid(&xs, &ys, period).unwrap();
        worst = worst
            .max(((e.v_hat - v) / v).abs())
            .max(((e.mean_level - a) / a).abs());
    }
    (
        worst <= FIT_EXACT_REL_TOL,
        format!("max relative error {worst:.1e}"),
    )
}

fn coverage() -> Outcome {
    let apparatus = ApparatusModel {
        pair_rate_hz: 400.0,
        integration_time_s: 10.0,
        ..ApparatusModel::default()
    };
    let g = Geometry::default();
    let truth = 0.80 * slit_visibility_factor(&g);
    let covered = (0..COVERAGE_TRIALS)
        .filter(|&t| {
            let (v, se, _) = fitted(45.0, 45.0, apparatus, g, child_seed(77, t));
            (v - truth).abs() <= 1.96 * se
        })
        .count();
    (
        covered >= COVERAGE_MIN,
        format!("{covered}/{COVERAGE_TRIALS} 95% intervals cover V_eff"),
    )
}

fn oracle_agreement() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 1..=17 {
        let tp = deg(5.0 * i as f64);
        let r = refine_angle(
            tp,
            &ApparatusModel::default(),
            &Geometry::default(),
            deg(1.0),
            deg(89.0),
            deg(1e-7),
        )
        .unwrap();
        worst = worst.max((r.angle.degrees() - distillation_angle(tp).unwrap().degrees()).abs());
    }
    (
        worst <= ORACLE_TOL_DEG,
        format!("max |refined − closed form|={worst:.1e}°"),
    )
}

fn byte_identical_reruns() -> Outcome {
    let s = RunSettings::new(
        22.5,
        57.0,
        ApparatusModel::default(),
        Geometry::default(),
        ScanConfig {
            seed: 99,
            ..ScanConfig::default()
        },
    );
    let a = write_dataset(&run_scan(&s).unwrap());
    let b = write_dataset(&run_scan(&s).unwrap());
    let c = base_config();
    let t1 = write_table(
        DatasetId::Fig8,
        &c,
        &reproduce(DatasetId::Fig8, &c).unwrap(),
    );
    let t2 = write_table(
        DatasetId::Fig8,
        &c,
        &reproduce(DatasetId::Fig8, &c).unwrap(),
    );
    (
        a == b && t1 == t2,
        format!("dataset {} bytes, table {} bytes", a.len(), t1.len()),
    )
}

fn report(id: &str, name: &str, (ok, detail): Outcome) -> bool {
    println!(
        "{} [{id}] {name}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

fn main() -> ExitCode {
    let mut all = true;
    all &= report("1", "balancing-angle table within ±0.5°", angle_table());
    all &= report("2", "grid optimum at 57° for θ_P=22.5°", grid_optimum());
    all &= report("3", "maximal-state visibility", maximal_state());
    all &= report(
        "4",
        "distilled vs undistilled ordering and values",
        ordering(),
    );
    all &= report(
        "5",
        "unmodelled 22.5°/22.5° row flagged excluded",
        excluded_row(),
    );

    let start = Instant::now();
    let props: [Check; 7] = [
        ("distillation exactness grid", distillation_exactness),
        ("contrast identity", contrast_identity),
        ("slit-factor limits", slit_limits),
        ("fit exactness", fit_exactness),
        ("estimator coverage", coverage),
        ("oracle agreement", oracle_agreement),
        ("byte-identical reruns", byte_identical_reruns),
    ];
    for (i, (name, check)) in props.iter().enumerate() {
        all &= report(&format!("6.{}", i + 1), name, check());
    }
    let elapsed = start.elapsed();
    all &= report(
        "6",
        "property suites within the time budget",
        (
            elapsed < PROPERTY_TIME_LIMIT,
            format!("{:.2} s", elapsed.as_secs_f64()),
        ),
    );

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
