//! Bracketed scalar root finding: bisection refined by inverse quadratic
//! interpolation (Brent's method). Robustness over speed; every iterate stays
//! inside a sign-changing bracket.

use crate::error::{Error, Result};

/// A validated sign-changing bracket.
#[derive(Debug, Clone, Copy)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl RootBracket {
    pub fn new(lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidBracket { lo, hi, f_lo, f_hi });
        }
        if f_lo * f_hi > 0.0 || !f_lo.is_finite() || !f_hi.is_finite() {
            return Err(Error::InvalidBracket { lo, hi, f_lo, f_hi });
        }
        Ok(Self { lo, hi, f_lo, f_hi })
    }

    /// Evaluate `f` at both ends and validate.
    pub fn evaluate<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, f(lo), f(hi))
    }
}

/// Find a root of `f` inside `bracket`.
///
/// Stops when |f| <= tol or the bracket width drops below tol (plus a
/// machine-precision floor). Deterministic.
pub fn find_root<F: Fn(f64) -> f64>(f: F, bracket: RootBracket, tol: f64) -> Result<f64> {
    find_root_traced(f, bracket, tol, &mut |_, _, _, _| {})
}

/// Same as [`find_root`] but reports every bracket the iteration holds, for
/// verification that the endpoints straddle zero throughout.
pub(crate) fn find_root_traced<F, T>(
    f: F,
    bracket: RootBracket,
    tol: f64,
    trace: &mut T,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    T: FnMut(f64, f64, f64, f64),
{
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(
            "root tolerance must be positive".to_string(),
        ));
    }
    let RootBracket {
        lo: mut a,
        hi: mut b,
        f_lo: mut fa,
        f_hi: mut fb,
    } = bracket;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }

    // Brent: b is the current best iterate, a the counterpoint, c the
    // previous b.
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..200 {
        if fb.abs() > fc.abs() {
            // make b the best point
            a = b;
            fa = fb;
            b = c;
            fb = fc;
            c = a;
            fc = fa;
        }
        trace(
            b.min(c),
            b.max(c),
            if b < c { fb } else { fc },
            if b < c { fc } else { fb },
        );
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 || fb.abs() <= tol {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // attempt inverse quadratic (or secant) interpolation
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q0 = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * q0 * (q0 - r) - (b - a) * (r - 1.0)),
                    (q0 - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
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
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Ok(b)
}
