//! The map F(rho, ell) = rho^q |rho + ell|^(1-q) and its inverses.
//!
//! Every inverse solves `ln F = ln y` in a variable chosen so that the
//! function is monotone and well scaled on the branch: `ln rho` where rho can
//! approach 0, `ln(1 - rho)` or `ln(rho - 1)` where it can approach 1.
//! Inputs may be passed as `ln y`, which keeps full relative accuracy when y
//! is an exponential of a large potential.

use crate::error::{Error, Result};
use crate::real::Real;
use crate::roots::newton_bracketed;

/// Relative distance below the branch maximum that is snapped to the junction.
pub const JUNCTION_TOL: f64 = 1e-12;
const MAX_ITER: usize = 200;

/// Which preimage of F(., -ell_t) to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// rho in [0, q ell_t], increasing in y.
    One,
    /// rho in [q ell_t, ell_t], decreasing in y.
    Two,
    /// rho in [ell_t, inf), increasing in y.
    Three,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::One, Branch::Two, Branch::Three];
}

pub fn eval_f<T: Real>(rho: T, ell: T, q: T) -> T {
    if rho == T::zero() {
        return T::zero();
    }
    rho.powf(q) * (rho + ell).abs().powf(T::one() - q)
}

pub fn m_q<T: Real>(q: T) -> T {
    q.powf(q) * (T::one() - q).powf(T::one() - q)
}

/// Local maximum of F(., -ell_t), attained at q ell_t.
pub fn branch_max<T: Real>(ell_t: T, q: T) -> T {
    m_q(q) * ell_t
}

fn softplus<T: Real>(s: T) -> T {
    if s > T::zero() {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

fn sigmoid<T: Real>(s: T) -> T {
    if s >= T::zero() {
        T::one() / (T::one() + (-s).exp())
    } else {
        let e = s.exp();
        e / (T::one() + e)
    }
}

fn ftol<T: Real>(scale: T) -> T {
    T::lit(16.0) * T::epsilon() * (T::one() + scale.abs())
}

fn check_q<T: Real>(q: T) -> Result<()> {
    if q > T::zero() && q < T::one() {
        Ok(())
    } else {
        Err(Error::Domain(format!("exponent q = {q} outside (0, 1)")))
    }
}

/// Inverse of F(., ell) for ell >= 0.
pub fn invert_g<T: Real>(y: T, ell: T, q: T) -> Result<T> {
    if y < T::zero() || y.is_nan() {
        return Err(Error::Domain(format!("G needs y >= 0, got {y}")));
    }
    if y == T::zero() {
        return Ok(T::zero());
    }
    if ell == T::zero() {
        check_q(q)?;
        return Ok(y);
    }
    invert_g_ln(y.ln(), ell, q)
}

/// [`invert_g`] with the target given as `ln y`.
pub fn invert_g_ln<T: Real>(ln_y: T, ell: T, q: T) -> Result<T> {
    check_q(q)?;
    if ell < T::zero() || ell.is_nan() {
        return Err(Error::Domain(format!("G needs ell >= 0, got {ell}")));
    }
    if ln_y == T::neg_infinity() {
        return Ok(T::zero());
    }
    if ell == T::zero() {
        return Ok(ln_y.exp());
    }
    // unit problem: rho = ell * exp(s), F(exp(s), 1) = y / ell
    let d = ln_y - ell.ln();
    let one_q = T::one() - q;
    let phi = |s: T| (q * s + one_q * softplus(s) - d, q + one_q * sigmoid(s));
    let hi = d;
    let lo = hi - phi(hi).0 / q;
    let s = newton_bracketed(phi, lo, hi, hi, ftol(d), MAX_ITER)?;
    Ok(ell * s.exp())
}

/// Inverse of the requested branch of F(., -ell_t), ell_t > 0.
pub fn invert_branch<T: Real>(y: T, ell_t: T, q: T, branch: Branch) -> Result<T> {
    if y < T::zero() || y.is_nan() {
        return Err(Error::Domain(format!("branch inverse needs y >= 0, got {y}")));
    }
    let ln_y = if y == T::zero() { T::neg_infinity() } else { y.ln() };
    invert_branch_ln(ln_y, ell_t, q, branch)
}

/// [`invert_branch`] with the target given as `ln y`.
pub fn invert_branch_ln<T: Real>(ln_y: T, ell_t: T, q: T, branch: Branch) -> Result<T> {
    check_q(q)?;
    if !(ell_t > T::zero()) || !ell_t.is_finite() {
        return Err(Error::Domain(format!("branch inverse needs ell_t > 0, got {ell_t}")));
    }
    if ln_y.is_nan() {
        return Err(Error::Domain("branch inverse got NaN target".into()));
    }
    let unit = ln_y - ell_t.ln();
    let one_q = T::one() - q;
    if ln_y == T::neg_infinity() {
        return Ok(match branch {
            Branch::One => T::zero(),
            Branch::Two | Branch::Three => ell_t,
        });
    }
    let rho = match branch {
        Branch::Three => {
            let phi = |t: T| (q * softplus(t) + one_q * t - unit, q * sigmoid(t) + one_q);
            let hi = unit.min(unit / one_q);
            let lo = hi - phi(hi).0 / one_q;
            let t = newton_bracketed(phi, lo, hi, hi, ftol(unit), MAX_ITER)?;
            T::one() + t.exp()
        }
        Branch::One | Branch::Two => {
            let ln_m = m_q(q).ln();
            let d = unit - ln_m;
            let junction = T::lit(JUNCTION_TOL).max(T::lit(4.0) * T::epsilon());
            if d >= T::zero() {
                if d <= junction {
                    return Ok(q * ell_t);
                }
                return Err(Error::Domain(format!(
                    "y exceeds the branch maximum m_q ell_t by relative {}",
                    d.exp() - T::one()
                )));
            }
            let (ln_q, ln_1q) = (q.ln(), one_q.ln());
            if branch == Branch::One {
                let phi = |s: T| {
                    let e = s.exp();
                    let v = q * (s - ln_q) + one_q * ((-e).ln_1p() - ln_1q) - d;
                    (v, q - one_q * e / (T::one() - e))
                };
                let hi = ln_q;
                let lo = (unit / q).min(hi);
                let s = newton_bracketed(phi, lo, hi, lo, ftol(unit), MAX_ITER)?;
                s.exp().min(q)
            } else {
                let phi = |t: T| {
                    let e = t.exp();
                    let v = q * ((-e).ln_1p() - ln_q) + one_q * (t - ln_1q) - d;
                    (v, one_q - q * e / (T::one() - e))
                };
                let hi = ln_1q;
                let lo = (unit / one_q).min(hi);
                let t = newton_bracketed(phi, lo, hi, lo, ftol(unit), MAX_ITER)?;
                (-t.exp_m1()).max(q)
            }
        }
    };
    Ok(ell_t * rho)
}
