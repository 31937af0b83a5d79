//! Confining potentials and the structural checks the wave constructions rely on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::roots::brent;

/// A confining potential on an open interval.
pub trait Confinement<T: Real> {
    fn domain(&self) -> (T, T);
    fn value(&self, x: T) -> T;
    fn d1(&self, x: T) -> T;
    fn d2(&self, x: T) -> T;
}

/// Named potential families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Potential<T> {
    /// ((1/2 - x)(1/2 + x))^(-beta) - 4^beta on (-1/2, 1/2).
    StripPower { beta: T },
    /// V = 0 on (-1/2, 1/2). Synthetic; fails the strip checks on purpose.
    Flat,
    /// scale * [((r - r0)(r1 - r))^(-beta) - ((r1 - r0)/2)^(-2 beta)] on (r0, r1).
    AnnulusPower { r0: T, r1: T, beta: T, scale: T },
}

/// Power well written in the centred variable z = (2x - lo - hi)/(hi - lo):
/// V = k [(1 - z^2)^(-beta) - 1] with k = scale * ((hi - lo)/2)^(-2 beta).
struct Well<T> {
    lo: T,
    hi: T,
    beta: T,
    k: T,
}

impl<T: Real> Well<T> {
    fn z(&self, x: T) -> (T, T) {
        let w = self.hi - self.lo;
        ((x + x - (self.lo + self.hi)) / w, T::lit(2.0) / w)
    }

    fn value(&self, x: T) -> T {
        let (z, _) = self.z(x);
        if z.abs() >= T::one() {
            return T::infinity();
        }
        self.k * (-self.beta * (-z * z).ln_1p()).exp_m1()
    }

    fn d1(&self, x: T) -> T {
        let (z, dz) = self.z(x);
        if z.abs() >= T::one() {
            return T::infinity() * z.signum();
        }
        let two = T::lit(2.0);
        self.k * dz * two * self.beta * z * (T::one() - z * z).powf(-self.beta - T::one())
    }

    fn d2(&self, x: T) -> T {
        let (z, dz) = self.z(x);
        if z.abs() >= T::one() {
            return T::infinity();
        }
        let (two, four) = (T::lit(2.0), T::lit(4.0));
        let s = T::one() - z * z;
        let b = self.beta;
        self.k * dz * dz * (two * b * s.powf(-b - T::one()) + four * b * (b + T::one()) * z * z * s.powf(-b - two))
    }
}

impl<T: Real> Potential<T> {
    pub fn strip_default() -> Self {
        Potential::StripPower { beta: T::lit(0.75) }
    }

    pub fn is_strip(&self) -> bool {
        !matches!(self, Potential::AnnulusPower { .. })
    }

    fn well(&self) -> Option<Well<T>> {
        let half = T::lit(0.5);
        match *self {
            Potential::StripPower { beta } => {
                Some(Well { lo: -half, hi: half, beta, k: T::lit(4.0).powf(beta) })
            }
            Potential::Flat => None,
            Potential::AnnulusPower { r0, r1, beta, scale } => {
                let hw = half * (r1 - r0);
                Some(Well { lo: r0, hi: r1, beta, k: scale * hw.powf(-T::lit(2.0) * beta) })
            }
        }
    }
}

impl<T: Real> Confinement<T> for Potential<T> {
    fn domain(&self) -> (T, T) {
        match *self {
            Potential::AnnulusPower { r0, r1, .. } => (r0, r1),
            _ => (T::lit(-0.5), T::lit(0.5)),
        }
    }

    fn value(&self, x: T) -> T {
        self.well().map_or(T::zero(), |w| w.value(x))
    }

    fn d1(&self, x: T) -> T {
        self.well().map_or(T::zero(), |w| w.d1(x))
    }

    fn d2(&self, x: T) -> T {
        self.well().map_or(T::zero(), |w| w.d2(x))
    }
}

fn fail<T: Real>(check: &str, at: T) -> Error {
    Error::Potential { check: check.into(), at: at.to_f64().unwrap_or(f64::NAN) }
}

/// Checks that a strip potential is even, vanishes with positive curvature at
/// the centre, increases towards the walls and blows up there.
pub fn validate_strip<T: Real, P: Confinement<T>>(v: &P, mesh: usize) -> Result<()> {
    let half = T::lit(0.5);
    let (lo, hi) = v.domain();
    if lo != -half || hi != half {
        return Err(fail("strip domain is (-1/2, 1/2)", lo));
    }
    if v.value(T::zero()) != T::zero() {
        return Err(fail("V(0) = 0", T::zero()));
    }
    if !(v.d2(T::zero()) > T::zero()) {
        return Err(fail("V''(0) > 0", T::zero()));
    }
    let n = mesh.max(8);
    let mut prev = T::zero();
    for i in 1..n {
        let x = half * T::from_usize(i).unwrap() / T::from_usize(n).unwrap();
        let vx = v.value(x);
        let tol = T::lit(64.0) * T::epsilon() * (T::one() + vx.abs());
        if (vx - v.value(-x)).abs() > tol {
            return Err(fail("V even", x));
        }
        if !(vx > prev) {
            return Err(fail("V increasing on [0, 1/2)", x));
        }
        prev = vx;
    }
    let near = v.value(half - T::lit(1e-6));
    if !(near > T::lit(10.0) * v.value(T::lit(0.4))) || !(near > T::one()) {
        return Err(fail("V blows up at the walls", half));
    }
    Ok(())
}

/// Checks an annular potential and returns its minimiser R*.
///
/// Requires V >= 0, V'' > 0 and V'/r strictly increasing on [R*, R1) over the mesh.
pub fn validate_annulus<T: Real, P: Confinement<T>>(v: &P, mesh: usize) -> Result<T> {
    let (r0, r1) = v.domain();
    if !(r0 > T::zero() && r1 > r0) {
        return Err(fail("0 < R0 < R1", r0));
    }
    let w = r1 - r0;
    let eps = T::lit(1e-9) * w;
    let r_star = brent(|r| Ok(v.d1(r)), r0 + eps, r1 - eps, T::lit(1e-15) * r1, 200)
        .map_err(|_| fail("V' changes sign once", r0))?;
    let n = mesh.max(8);
    let step = w / T::from_usize(n).unwrap();
    for i in 1..n {
        let r = r0 + step * T::from_usize(i).unwrap();
        if v.value(r) < -T::lit(1e-12) {
            return Err(fail("V >= 0", r));
        }
        if !(v.d2(r) > T::zero()) {
            return Err(fail("V'' > 0", r));
        }
    }
    let m = n;
    let span = r1 - r_star;
    let mut prev = v.d1(r_star) / r_star;
    for i in 1..m {
        let r = r_star + span * T::from_usize(i).unwrap() / T::from_usize(m).unwrap();
        let g = v.d1(r) / r;
        if !(g > prev) {
            return Err(fail("V'/r strictly increasing on [R*, R1)", r));
        }
        prev = g;
    }
    Ok(r_star)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_values() {
        let v = Potential::<f64>::strip_default();
        assert_eq!(v.value(0.0), 0.0);
        let want = (0.25f64 * 0.75).powf(-0.75) - 4f64.powf(0.75);
        assert!((v.value(0.25) - want).abs() < 1e-14 * want);
        assert_eq!(v.value(0.3), v.value(-0.3));
        validate_strip(&v, 1000).unwrap();
    }

    #[test]
    fn derivatives_match_differences() {
        let pots = [
            Potential::<f64>::strip_default(),
            Potential::AnnulusPower { r0: 1.0, r1: 2.0, beta: 0.75, scale: 1.0 },
        ];
        for v in pots {
            let (lo, hi) = v.domain();
            for i in 1..20 {
                let x = lo + (hi - lo) * i as f64 / 20.0;
                let h = 1e-5;
                let fd1 = (v.value(x + h) - v.value(x - h)) / (2.0 * h);
                let fd2 = (v.d1(x + h) - v.d1(x - h)) / (2.0 * h);
                assert!((fd1 - v.d1(x)).abs() < 1e-6 * (1.0 + v.d1(x).abs()));
                assert!((fd2 - v.d2(x)).abs() < 1e-6 * (1.0 + v.d2(x).abs()));
            }
        }
    }

    #[test]
    fn flat_fails_strip_checks() {
        match validate_strip(&Potential::<f64>::Flat, 100) {
            Err(Error::Potential { check, .. }) => assert!(check.contains("V''")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn annulus_minimiser_is_midpoint() {
        let v = Potential::<f64>::AnnulusPower { r0: 1.0, r1: 2.0, beta: 0.75, scale: 1.0 };
        let rs = validate_annulus(&v, 2000).unwrap();
        assert!((rs - 1.5).abs() < 1e-12);
        assert!(v.value(rs).abs() < 1e-20);
    }

    struct Dented;
    impl Confinement<f64> for Dented {
        fn domain(&self) -> (f64, f64) {
            (1.0, 2.0)
        }
        fn value(&self, r: f64) -> f64 {
            let z = r - 1.5;
            z * z + 0.2 * z.powi(4) * (40.0 * z).sin()
        }
        fn d1(&self, r: f64) -> f64 {
            let z = r - 1.5;
            2.0 * z + 0.8 * z.powi(3) * (40.0 * z).sin() + 8.0 * z.powi(4) * (40.0 * z).cos()
        }
        fn d2(&self, _r: f64) -> f64 {
            1.0
        }
    }

    #[test]
    fn annulus_check_names_offending_radius() {
        match validate_annulus(&Dented, 2000) {
            Err(Error::Potential { check, at }) => {
                assert!(check.contains("V'/r"));
                assert!(at > 1.5 && at < 2.0);
            }
            other => panic!("{other:?}"),
        }
    }
}
