//! Scalar root finders used by the inversions and the shooting problems.

use crate::error::{Error, Result};
use crate::real::Real;

/// Newton's method kept inside a sign-changing bracket, falling back to
/// bisection whenever a step leaves it. `f` returns the value and derivative
/// of an increasing function with `f(lo) <= 0 <= f(hi)`.
pub fn newton_bracketed<T, F>(mut f: F, mut lo: T, mut hi: T, x0: T, ftol: T, max_iter: usize) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> (T, T),
{
    let half = T::lit(0.5);
    let mut x = if x0 >= lo && x0 <= hi { x0 } else { half * (lo + hi) };
    let mut last = T::infinity();
    for _ in 0..max_iter {
        let (fx, dfx) = f(x);
        if !fx.is_finite() {
            return Err(Error::NoConvergence { what: "bracketed Newton".into(), residual: f64::NAN });
        }
        last = fx;
        if fx.abs() <= ftol {
            return Ok(x);
        }
        if fx < T::zero() {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= T::lit(4.0) * T::epsilon() * x.abs().max(T::min_positive_value()) {
            return Ok(x);
        }
        let step = x - fx / dfx;
        x = if dfx > T::zero() && step.is_finite() && step > lo && step < hi { step } else { half * (lo + hi) };
    }
    Err(Error::NoConvergence { what: "bracketed Newton".into(), residual: last.to_f64().unwrap_or(f64::NAN) })
}

/// Plain bisection; the bracket must change sign.
pub fn bisect<T, F>(mut f: F, mut lo: T, mut hi: T, xtol: T, max_iter: usize) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Domain(format!("bisection bracket [{lo}, {hi}] does not change sign")));
    }
    let half = T::lit(0.5);
    for _ in 0..max_iter {
        let mid = half * (lo + hi);
        if (hi - lo).abs() <= xtol {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if fm == T::zero() {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(half * (lo + hi))
}

/// Brent's method on a sign-changing bracket.
pub fn brent<T, F>(mut f: F, a0: T, b0: T, xtol: T, max_iter: usize) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    let (mut a, mut b) = (a0, b0);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Domain(format!("Brent bracket [{a}, {b}] does not change sign")));
    }
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let half = T::lit(0.5);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
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
        let tol1 = two * T::epsilon() * b.abs() + half * xtol;
        let xm = half * (c - b);
        if xm.abs() <= tol1 || fb == T::zero() {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * xm * s;
                q = T::one() - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (two * xm * qq * (qq - r) - (b - a) * (r - T::one()));
                q = (qq - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            }
            p = p.abs();
            let min1 = three * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
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
        b = if d.abs() > tol1 { b + d } else { b + tol1 * xm.signum() };
        fb = f(b)?;
    }
    Err(Error::NoConvergence { what: "Brent".into(), residual: fb.to_f64().unwrap_or(f64::NAN) })
}
