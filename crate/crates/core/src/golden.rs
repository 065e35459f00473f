//! Golden-section search for the maximum of a unimodal function.

/// `(√5 − 1) / 2`.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes `f` on `[lo, hi]` until the bracket is narrower than `tol`.
///
/// Returns the best abscissa seen together with its value.
pub(crate) fn maximize<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let tol = tol.max(f64::EPSILON * (lo.abs() + hi.abs()));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    [(c, fc), (d, fd), (mid, fm)]
        .into_iter()
        .fold(
            (mid, fm),
            |best, cand| if cand.1 > best.1 { cand } else { best },
        )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let (x, fx) = maximize(|x| -(x - 1.3) * (x - 1.3) + 2.0, 0.0, 5.0, 1e-10);
        assert!((x - 1.3).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_objective_ends_at_boundary() {
        let (x, _) = maximize(|x| x, 0.0, 1.0, 1e-9);
        assert!((x - 1.0).abs() < 1e-8);
        let (x, _) = maximize(|x| -x, 0.0, 1.0, 1e-9);
        assert!(x.abs() < 1e-8);
    }

    #[test]
    fn peaked_trig_objective() {
        let (x, _) = maximize(libm::sin, 0.5, 3.0, 1e-12);
        assert!((x - core::f64::consts::FRAC_PI_2).abs() < 1e-6);
    }
}
