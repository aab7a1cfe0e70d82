//! Small one-dimensional numerical routines shared by the solvers.

/// Inverse golden ratio, `(√5 − 1)/2`.
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`, recursing at most `max_depth` levels.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Result of a golden-section maximization.
#[derive(Debug, Clone, Copy)]
pub struct LineMax {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Maximizes `f` on `[lo, hi]` by golden-section search until the bracket
/// is narrower than `tol`. The best point seen, including the endpoints,
/// is returned, so a monotone objective yields the maximizing endpoint.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> LineMax {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut best = LineMax {
        x: a,
        value: f(a),
        evaluations: 1,
    };
    let consider = |x: f64, v: f64, best: &mut LineMax| {
        // strict comparison keeps the earlier (and on ties, smaller) point
        if v > best.value || (v == best.value && x < best.x) {
            best.x = x;
            best.value = v;
        }
    };
    let fb = f(b);
    best.evaluations += 1;
    consider(b, fb, &mut best);
    if b - a <= tol {
        return best;
    }

    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    best.evaluations += 2;
    consider(x1, f1, &mut best);
    consider(x2, f2, &mut best);

    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
            consider(x1, f1, &mut best);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
            consider(x2, f2, &mut best);
        }
        best.evaluations += 1;
        if best.evaluations > 10_000 {
            break;
        }
    }
    best
}

/// Finds a sign change of `f` on `[lo, hi]` by bisection; `f(lo)` and
/// `f(hi)` must have opposite signs (or one be zero). Returns the midpoint
/// of the final bracket.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return None;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_and_sqrt() {
        let v = adaptive_simpson(|x| x * x, 0.0, 3.0, 1e-12, 50);
        assert!((v - 9.0).abs() < 1e-12);
        // singular derivative at the origin exercises the recursion
        let v = adaptive_simpson(|x: f64| x.sqrt(), 0.0, 1.0, 1e-10, 50);
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn golden_section_finds_interior_max() {
        let r = golden_section_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((r.x - 0.3).abs() < 1e-7);
    }

    #[test]
    fn golden_section_monotone_returns_endpoint() {
        let r = golden_section_max(|x| x, 0.0, 2.0, 1e-9);
        assert_eq!(r.x, 2.0);
        let r = golden_section_max(|x| -x, 0.0, 2.0, 1e-9);
        assert_eq!(r.x, 0.0);
    }

    #[test]
    fn bisection_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-14).is_none());
    }
}
