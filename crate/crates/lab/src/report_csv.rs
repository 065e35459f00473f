//! Text form of an analyzer search.

use std::fmt::Write as _;

use biphoton::DistillReport;

pub const HEADER: &str = "theta_a_deg,v_hat,std_err,yield";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `#` metadata lines followed by one row per evaluated analyzer angle.
/// Failed points and unknown yields leave their fields empty.
pub fn write_report(report: &DistillReport, theta_p_deg: Option<f64>) -> String {
    let mut out = String::new();
    let mut meta = |k: &str, v: String| {
        let _ = writeln!(out, "# {k}={v}");
    };
    meta("theta_p_deg", opt(theta_p_deg));
    meta("best_theta_a_deg", report.best_theta_a_deg.to_string());
    meta("best_v", report.best_v.to_string());
    meta("refined_theta_a_deg", opt(report.refined_theta_a_deg));
    meta("analytic_theta_a_deg", opt(report.analytic_theta_a_deg));
    meta("eq4_residual", opt(report.balance_residual_at_best));
    meta("flat", report.flat.to_string());

    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let _ = w.write_record(HEADER.split(','));
    for p in &report.grid {
        let _ = w.write_record([
            p.theta_a_deg.to_string(),
            opt(p.estimate.map(|e| e.v_hat)),
            opt(p.estimate.map(|e| e.std_err)),
            opt(p.yield_probability),
        ]);
    }
    let body = w.into_inner().expect("writing to memory cannot fail");
    out.push_str(std::str::from_utf8(&body).expect("csv output is utf-8"));
    out
}
