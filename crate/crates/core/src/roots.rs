//! Scalar root refinement on a sign-change bracket.

/// Bisection down to `1e-4` of the initial width, then Illinois steps until
/// the bracket collapses to adjacent floats. `f(a)` and `f(b)` must differ
/// in sign.
pub(crate) fn bracketed_root<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    debug_assert!(fa.signum() != fb.signum());
    let coarse = 1e-4 * (b - a).abs();
    while (b - a).abs() > coarse {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        if c == a || c == b {
            break;
        }
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}
