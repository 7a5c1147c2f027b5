//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Bisection on a sign-changing bracket `[lo, hi]`. Infinite values are
/// accepted as long as their sign is meaningful.
///
/// Stops when `|f| <= f_tol` or when the bracket can no longer be split in
/// floating point. Returns the endpoint with the smaller residual.
pub fn bisect(context: &'static str, f: impl Fn(f64) -> f64, lo: f64, hi: f64, f_tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::Bracket {
            context,
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let mut fb = fb;
    for _ in 0..2000 {
        let mid = 0.5 * (a + b);
        if mid <= a.min(b) || mid >= a.max(b) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 || fm.abs() <= f_tol {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
    }
    Ok(if fa.abs() <= fb.abs() { a } else { b })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect("test", |x| x * x - 2.0, 0.0, 2.0, 0.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn reversed_bracket_and_tolerance() {
        let r = bisect("test", |x| 1.0 - x, 3.0, 0.0, 1e-6).unwrap();
        assert!((r - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn missing_sign_change_is_reported() {
        let e = bisect("test", |x| x * x + 1.0, -1.0, 1.0, 0.0).unwrap_err();
        assert!(matches!(e, Error::Bracket { context: "test", .. }));
    }
}
