//! Bracketed root finders.
//!
//! Both solvers keep a sign-change bracket for the whole iteration, so they
//! cannot escape the interval they were given. `newton_bisect` takes Newton
//! steps whenever the step stays inside the bracket and shrinks it fast
//! enough, and falls back to bisection otherwise. `brent` needs no
//! derivative.

use crate::error::{Error, Result};
use crate::tolerance::Tolerance;

fn check_bracket(lo: f64, hi: f64, flo: f64, fhi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && flo.is_finite() && fhi.is_finite()) {
        return Err(Error::NoSignChange { lo, hi, flo, fhi });
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoSignChange { lo, hi, flo, fhi });
    }
    Ok(())
}

/// Safeguarded Newton iteration on `[lo, hi]`.
///
/// `f` returns the value and the derivative at a point.
pub fn newton_bisect<F>(f: F, lo: f64, hi: f64, tol: &Tolerance) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    if flo == 0.0 {
        return Ok(lo);
    }
    let (fhi, _) = f(hi);
    if fhi == 0.0 {
        return Ok(hi);
    }
    check_bracket(lo, hi, flo, fhi)?;

    // xl carries the negative value, xh the positive one
    let (mut xl, mut xh) = if flo < 0.0 { (lo, hi) } else { (hi, lo) };
    let mut x = 0.5 * (lo + hi);
    let mut dx_old = (hi - lo).abs();
    let mut dx = dx_old;
    let (mut fx, mut dfx) = f(x);

    for _ in 0..tol.max_iter {
        if fx == 0.0 {
            return Ok(x);
        }
        let newton_leaves = ((x - xh) * dfx - fx) * ((x - xl) * dfx - fx) > 0.0;
        let newton_slow = (2.0 * fx).abs() > (dx_old * dfx).abs();
        if newton_leaves || newton_slow || !dfx.is_finite() || dfx == 0.0 {
            dx_old = dx;
            dx = 0.5 * (xh - xl);
            x = xl + dx;
        } else {
            dx_old = dx;
            dx = fx / dfx;
            x -= dx;
        }
        let width = tol.abs + tol.rel * x.abs();
        if dx.abs() <= width {
            return Ok(x);
        }
        let next = f(x);
        fx = next.0;
        dfx = next.1;
        if fx < 0.0 {
            xl = x;
        } else {
            xh = x;
        }
        if (xh - xl).abs() <= width {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence {
        iterations: tol.max_iter,
        lo: xl.min(xh),
        hi: xl.max(xh),
    })
}

/// Brent's method on `[lo, hi]`.
pub fn brent<F>(f: F, lo: f64, hi: f64, tol: &Tolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    check_bracket(a, b, fa, fb)?;

    let (mut c, mut fc) = (b, fb);
    let (mut d, mut e) = (b - a, b - a);
    for _ in 0..tol.max_iter {
        if (fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * (tol.abs + tol.rel * b.abs());
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Err(Error::NoConvergence {
        iterations: tol.max_iter,
        lo: b.min(c),
        hi: b.max(c),
    })
}

/// Moves `lo` to the left (doubling the distance to `hi`) until `f` changes
/// sign on `[lo, hi]`. Returns the new `lo`.
pub fn expand_left<F>(f: F, mut lo: f64, hi: f64, max_doublings: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let fhi = f(hi);
    let mut width = hi - lo;
    for _ in 0..max_doublings {
        let flo = f(lo);
        if flo == 0.0 || flo.signum() != fhi.signum() {
            return Ok(lo);
        }
        width *= 2.0;
        lo = hi - width;
    }
    Err(Error::NoConvergence {
        iterations: max_doublings,
        lo,
        hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_bisect_finds_sqrt2() {
        let tol = Tolerance::default();
        let r = newton_bisect(|x| (x * x - 2.0, 2.0 * x), 0.0, 2.0, &tol).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn newton_bisect_survives_flat_derivative() {
        // derivative vanishes at the root of (x-1)^3
        let tol = Tolerance::default();
        let r = newton_bisect(|x| ((x - 1.0).powi(3), 3.0 * (x - 1.0).powi(2)), -3.0, 2.5, &tol)
            .unwrap();
        assert!((r - 1.0).abs() < 1e-5);
    }

    #[test]
    fn brent_matches_closed_form() {
        let tol = Tolerance::default();
        let r = brent(|x| x.cos() - x, 0.0, 1.0, &tol).unwrap();
        assert!((r.cos() - r).abs() < 1e-14);
    }

    #[test]
    fn missing_sign_change_is_reported() {
        let tol = Tolerance::default();
        let err = brent(|x| x * x + 1.0, -1.0, 1.0, &tol).unwrap_err();
        assert!(matches!(err, Error::NoSignChange { .. }));
    }

    #[test]
    fn iteration_cap_carries_bracket() {
        let tol = Tolerance::new(1e-300, 1e-300, 3).unwrap();
        match brent(|x| x - 0.3, 0.0, 1.0, &tol) {
            Err(Error::NoConvergence { lo, hi, .. }) => assert!(lo <= 0.3 + 1e-9 && hi >= 0.3 - 1e-9),
            Ok(r) => assert!((r - 0.3).abs() < 1e-12),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn expand_left_doubles() {
        let lo = expand_left(|x| x + 100.0, -1.0, 0.0, 20).unwrap();
        assert!(lo <= -100.0);
    }
}
