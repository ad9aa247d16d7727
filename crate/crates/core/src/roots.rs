//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Finds a sign change of `f` on `[a, b]` to absolute width `xtol`.
///
/// Illinois-modified regula falsi with a bisection step whenever the bracket
/// fails to halve, so convergence is never slower than bisection.
pub fn bracketed<F>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracketing {
            lo: a,
            hi: b,
            reason: format!("no sign change (f(lo) = {fa:.3e}, f(hi) = {fb:.3e})"),
        });
    }
    let mut side = 0i8;
    let mut width = b - a;
    for iter in 0..400 {
        if b - a <= xtol {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        // Force a bisection every other step if the bracket stalls.
        if !(c > a && c < b) || (iter % 2 == 1 && b - a > 0.5 * width) {
            c = 0.5 * (a + b);
            side = 0;
        }
        if iter % 2 == 1 {
            width = b - a;
        }
        let fc = f(c)?;
        if fc == 0.0 {
            return Ok(c);
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
    }
    Ok(0.5 * (a + b))
}

/// Plain bisection on a predicate that flips from `true` to `false` once on `[a, b]`.
pub fn bisect_predicate<F>(mut pred: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<bool>,
{
    while b - a > xtol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if pred(m)? {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}
