//! Travelling waves in the strip (-1/2, 1/2) x R.

mod build;
mod residual;

pub use build::{StripProfile, StripWave};
pub use residual::{reflection_norms, residual_strip, ResidualReport, Reflection};

use serde::{Deserialize, Serialize};

use crate::error::{Error, NoSolutionReason, Result};
use crate::implicit::{invert_branch_ln, invert_g_ln, Branch};
use crate::potential::{validate_strip, Confinement};
use crate::quad;
use crate::roots::brent;
use crate::{Derived, Params, Potential};

/// Which family of preimages of F the density is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveClass {
    /// ell >= 0, rho = G(C e^{-k'V}, ell).
    Positive,
    /// ell < 0, rho = G3.
    NegA,
    /// ell < 0, rho = G1.
    NegB,
    /// ell < 0, rho = G2.
    NegC,
    /// rho = G1 on the left half, G2 on the right: increasing through the centre.
    NegDInc,
    /// Mirror image of [`WaveClass::NegDInc`].
    NegDDec,
}

impl WaveClass {
    pub const ALL: [WaveClass; 6] =
        [Self::Positive, Self::NegA, Self::NegB, Self::NegC, Self::NegDInc, Self::NegDDec];

    pub fn name(self) -> &'static str {
        match self {
            Self::Positive => "positive",
            Self::NegA => "neg-a",
            Self::NegB => "neg-b",
            Self::NegC => "neg-c",
            Self::NegDInc => "neg-d-inc",
            Self::NegDDec => "neg-d-dec",
        }
    }

    pub fn is_negative(self) -> bool {
        self != Self::Positive
    }
}

/// Sign choice for u1: `Plus` has u1 > 0 on the left half of the strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripWaveSpec {
    /// Wave number of the phase in x2.
    pub z: f64,
    /// ell = -lambda / (b Z); negative for the negative classes.
    pub ell: f64,
    pub class: WaveClass,
    pub sign: Sign,
}

/// Integrals of the potential that control existence of each class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralConstants {
    pub i: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i12: f64,
}

/// Admissible interval of |ell| for one class, and where |u2| first touches 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassRange {
    pub lo: f64,
    pub hi: f64,
    /// True when `lo` itself is excluded (ell = 0 for the negative classes).
    pub lo_open: bool,
    /// The endpoint at which the wave has an interior point with |u2| = 1.
    pub critical: Option<f64>,
}

impl ClassRange {
    pub fn contains(&self, v: f64, rel: f64) -> bool {
        let slack = rel * self.hi.abs().max(1e-300);
        let above = if self.lo_open { v > self.lo } else { v >= self.lo - slack };
        above && v <= self.hi + slack
    }
}

/// Model, potential and tolerances shared by all strip computations.
#[derive(Debug, Clone)]
pub struct StripProblem {
    pub params: Params,
    pub derived: Derived,
    pub potential: Potential,
    pub quad_tol: f64,
    pub root_tol: f64,
}

pub const RANGE_REL_TOL: f64 = 1e-9;

impl StripProblem {
    /// Validates the parameters and potential. The flat potential is accepted
    /// without the shape checks.
    pub fn new(params: Params, potential: Potential) -> Result<Self> {
        params.validate()?;
        if !potential.is_strip() {
            return Err(Error::InvalidParams("strip waves need a strip potential".into()));
        }
        if potential != Potential::Flat {
            validate_strip(&potential, 2000)?;
        }
        Ok(Self { derived: params.derived(), params, potential, quad_tol: quad::DEFAULT_TOL, root_tol: 1e-13 })
    }

    pub fn with_tolerances(mut self, quad_tol: f64, root_tol: f64) -> Self {
        self.quad_tol = quad_tol;
        self.root_tol = root_tol;
        self
    }

    /// ln of e^{-k'V(x)}.
    pub fn ln_weight(&self, x: f64) -> f64 {
        -self.derived.kappa_prime * self.potential.value(x)
    }

    /// Integral of an even integrand over the strip, using symmetry.
    fn integrate_even(&self, f: impl FnMut(f64) -> f64) -> Result<f64> {
        Ok(2.0 * quad::integrate(f, 0.0, 0.5, self.quad_tol)?.value)
    }

    fn integrate_on(&self, f: impl FnMut(f64) -> f64, a: f64, b: f64) -> Result<f64> {
        Ok(quad::integrate(f, a, b, self.quad_tol)?.value)
    }

    /// The preimage used by `class` at ln-target `ln_y`, for |ell| = `ell_abs`.
    pub fn density_ln(&self, class: WaveClass, x: f64, ln_y: f64, ell_abs: f64) -> Result<f64> {
        let q = self.derived.q;
        match class {
            WaveClass::Positive => invert_g_ln(ln_y, ell_abs, q),
            WaveClass::NegA => invert_branch_ln(ln_y, ell_abs, q, Branch::Three),
            WaveClass::NegB => invert_branch_ln(ln_y, ell_abs, q, Branch::One),
            WaveClass::NegC => invert_branch_ln(ln_y, ell_abs, q, Branch::Two),
            WaveClass::NegDInc => {
                let b = if x <= 0.0 { Branch::One } else { Branch::Two };
                invert_branch_ln(ln_y, ell_abs, q, b)
            }
            WaveClass::NegDDec => {
                let b = if x <= 0.0 { Branch::Two } else { Branch::One };
                invert_branch_ln(ln_y, ell_abs, q, b)
            }
        }
    }

    /// rho(x) for normalising constant `c`.
    pub fn density(&self, class: WaveClass, x: f64, c: f64, ell_abs: f64) -> Result<f64> {
        let ln_y = if c > 0.0 { c.ln() + self.ln_weight(x) } else { f64::NEG_INFINITY };
        self.density_ln(class, x, ln_y, ell_abs)
    }

    pub(crate) fn mass_of(&self, class: WaveClass, c: f64, ell_abs: f64) -> Result<f64> {
        let mut err = None;
        let mut f = |x: f64| match self.density(class, x, c, ell_abs) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        };
        let r = match class {
            WaveClass::NegDInc | WaveClass::NegDDec => {
                let a = self.integrate_on(&mut f, -0.5, 0.0);
                let b = self.integrate_on(&mut f, 0.0, 0.5);
                a.and_then(|a| b.map(|b| a + b))
            }
            _ => self.integrate_even(&mut f),
        };
        if let Some(e) = err {
            return Err(e);
        }
        r
    }

    /// I, I1, I2, I3 and I12 for the current potential.
    pub fn constants(&self) -> Result<IntegralConstants> {
        let m = self.derived.m_q;
        let i = self.integrate_even(|x| self.ln_weight(x).exp())?;
        let i1 = self.mass_of(WaveClass::NegB, m, 1.0)?;
        let i2 = self.mass_of(WaveClass::NegC, m, 1.0)?;
        let i3 = self.mass_of(WaveClass::NegA, m, 1.0)?;
        let i12 = self.mass_of(WaveClass::NegDInc, m, 1.0)?;
        if !(i2 < 1.0) {
            return Err(Error::Verification(format!("expected I2 < 1, got {i2}")));
        }
        Ok(IntegralConstants { i, i1, i2, i3, i12 })
    }

    /// Normalising constant C with total mass 1.
    pub fn solve_c(&self, class: WaveClass, ell_abs: f64) -> Result<f64> {
        let m = self.derived.m_q;
        let tol = self.root_tol;
        let no_c = |detail: String| Error::no_solution(NoSolutionReason::Normalisation, detail);
        match class {
            WaveClass::Positive | WaveClass::NegA => {
                if class == WaveClass::Positive && ell_abs == 0.0 {
                    let i = self.integrate_even(|x| self.ln_weight(x).exp())?;
                    return Ok(1.0 / i);
                }
                if class == WaveClass::NegA {
                    if ell_abs > 1.0 {
                        return Err(no_c(format!("class (a) needs |ell| <= 1, got {ell_abs}")));
                    }
                    if ell_abs == 1.0 {
                        return Ok(0.0);
                    }
                }
                let f = |c: f64| Ok(self.mass_of(class, c, ell_abs)? - 1.0);
                let mut hi = 1.0;
                while f(hi)? < 0.0 {
                    hi *= 2.0;
                    if hi > 1e300 {
                        return Err(no_c("mass bracket diverged".into()));
                    }
                }
                brent(f, 0.0, hi, tol * hi, 200)
            }
            WaveClass::NegB | WaveClass::NegC => {
                let cmax = m * ell_abs;
                let f = |c: f64| Ok(self.mass_of(class, c, ell_abs)? - 1.0);
                let (f0, f1) = (f(0.0)?, f(cmax)?);
                if f0 == 0.0 {
                    return Ok(0.0);
                }
                if f1 == 0.0 {
                    return Ok(cmax);
                }
                if f0.signum() == f1.signum() {
                    return Err(no_c(format!(
                        "mass ranges over [{}, {}] for |ell| = {ell_abs}",
                        (f0 + 1.0).min(f1 + 1.0),
                        (f0 + 1.0).max(f1 + 1.0)
                    )));
                }
                brent(f, 0.0, cmax, tol * cmax, 200)
            }
            WaveClass::NegDInc | WaveClass::NegDDec => Ok(m * ell_abs),
        }
    }

    /// c1 / |b Z|: the value |u2| = 1 corresponds to.
    pub fn saturation(&self, z: f64) -> Result<f64> {
        let bz = (self.params.b * z).abs();
        if bz == 0.0 {
            return Err(Error::InvalidParams("strip waves need b Z != 0".into()));
        }
        Ok(self.params.c1 / bz)
    }

    /// H(ell) = G(C_ell, ell) + ell, the value of rho + ell at the centre.
    pub fn h_positive(&self, ell: f64) -> Result<f64> {
        let c = self.solve_c(WaveClass::Positive, ell)?;
        Ok(self.density(WaveClass::Positive, 0.0, c, ell)? + ell)
    }

    /// Critical ell* of the positive class.
    pub fn ell_star(&self, z: f64) -> Result<f64> {
        let t = self.saturation(z)?;
        let h0 = self.h_positive(0.0)?;
        if h0 > t * (1.0 + RANGE_REL_TOL) {
            return Err(Error::no_solution(
                NoSolutionReason::StripBound,
                format!("|bZ|/(c1 I) = {} > 1", h0 / t),
            ));
        }
        if h0 >= t {
            return Ok(0.0);
        }
        brent(|l| Ok(self.h_positive(l)? - t), 0.0, t, self.root_tol * t, 200)
    }

    fn h3(&self, lt: f64, inv_i: f64) -> Result<f64> {
        if lt == 0.0 {
            return Ok(inv_i);
        }
        let c = self.solve_c(WaveClass::NegA, lt)?;
        Ok(self.density(WaveClass::NegA, 0.0, c, lt)? - lt)
    }

    fn h2(&self, lt: f64) -> Result<f64> {
        let c = self.solve_c(WaveClass::NegC, lt)?;
        Ok(lt - self.density(WaveClass::NegC, 0.0, c, lt)?)
    }

    /// Admissible interval of ell (positive class) or of |ell| (negative classes).
    pub fn class_range(&self, class: WaveClass, z: f64, k: &IntegralConstants) -> Result<ClassRange> {
        let t = self.saturation(z)?;
        let q = self.derived.q;
        let strip_ok = 1.0 / k.i <= t * (1.0 + RANGE_REL_TOL);
        match class {
            WaveClass::Positive => {
                let s = self.ell_star(z)?;
                Ok(ClassRange { lo: 0.0, hi: s, lo_open: false, critical: Some(s) })
            }
            WaveClass::NegA => {
                if strip_ok {
                    return Ok(ClassRange { lo: 0.0, hi: 1.0, lo_open: true, critical: None });
                }
                let inv_i = 1.0 / k.i;
                let lo = brent(|l| Ok(self.h3(l, inv_i)? - t), 0.0, 1.0, self.root_tol, 200)?;
                Ok(ClassRange { lo, hi: 1.0, lo_open: false, critical: Some(lo) })
            }
            WaveClass::NegB => {
                if 1.0 / k.i1 > t * (1.0 + RANGE_REL_TOL) {
                    return Err(Error::no_solution(
                        NoSolutionReason::ClassBBound,
                        format!("|bZ|/(c1 I1) = {} > 1", 1.0 / (k.i1 * t)),
                    ));
                }
                Ok(ClassRange { lo: 1.0 / k.i1, hi: t, lo_open: false, critical: None })
            }
            WaveClass::NegC => {
                let top = 1.0 / k.i2;
                if (1.0 - q) * top <= t {
                    return Ok(ClassRange { lo: 1.0, hi: top, lo_open: false, critical: None });
                }
                let hi = brent(|l| Ok(self.h2(l)? - t), 1.0, top, self.root_tol, 200)?;
                Ok(ClassRange { lo: 1.0, hi, lo_open: false, critical: Some(hi) })
            }
            WaveClass::NegDInc | WaveClass::NegDDec => {
                let v = 1.0 / k.i12;
                if v > t * (1.0 + RANGE_REL_TOL) {
                    return Err(Error::no_solution(
                        NoSolutionReason::ClassDBound,
                        format!("|bZ|/(c1 I12) = {} > 1", v / t),
                    ));
                }
                Ok(ClassRange { lo: v, hi: v, lo_open: false, critical: None })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(pot: Potential) -> StripProblem {
        let p = Params::new(0.5, 0.4, 0.1, 1.0, -0.03267, -0.03267, 0.0).unwrap();
        StripProblem::new(p, pot).unwrap()
    }

    #[test]
    fn flat_constants_are_pointwise() {
        let s = problem(Potential::Flat);
        let k = s.constants().unwrap();
        // q = 1/2: G1(1/2, 1) = G2(1/2, 1) = 1/2 and G3(1/2, 1) = (1 + sqrt 2) / 2
        assert!((k.i - 1.0).abs() < 1e-12);
        assert!((k.i1 - 0.5).abs() < 1e-9);
        assert!((k.i2 - 0.5).abs() < 1e-9);
        assert!((k.i3 - 0.5 * (1.0 + 2f64.sqrt())).abs() < 1e-9);
        assert!((k.i12 - 0.5).abs() < 1e-9);
    }

    #[test]
    fn i12_is_mean_of_i1_i2() {
        let s = problem(Potential::strip_default());
        let k = s.constants().unwrap();
        assert!((k.i12 - 0.5 * (k.i1 + k.i2)).abs() < 1e-9);
        assert!(k.i1 < k.i2 && k.i2 < 1.0 && k.i3 > 1.0);
    }

    #[test]
    fn c_at_zero_ell_is_inverse_integral() {
        let s = problem(Potential::strip_default());
        let k = s.constants().unwrap();
        assert!((s.solve_c(WaveClass::Positive, 0.0).unwrap() - 1.0 / k.i).abs() < 1e-12);
    }

    #[test]
    fn class_a_at_unit_ell_has_zero_constant() {
        let s = problem(Potential::strip_default());
        assert_eq!(s.solve_c(WaveClass::NegA, 1.0).unwrap(), 0.0);
        assert!(s.solve_c(WaveClass::NegA, 1.2).is_err());
    }
}
