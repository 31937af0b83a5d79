use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Coefficients of the hydrodynamic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub c1: T,
    pub c2: T,
    pub theta: T,
    pub kappa: T,
    pub b: T,
    pub b_prime: T,
    pub theta_prime: T,
}

/// Quantities that only depend on the model coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams<T> {
    pub q: T,
    pub kappa_prime: T,
    /// `None` when 2 c2 - c1 <= 0; only the annulus needs it.
    pub a: Option<T>,
    /// q^q (1-q)^(1-q), the local maximum of F(., -1).
    pub m_q: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(c1: T, c2: T, theta: T, kappa: T, b: T, b_prime: T, theta_prime: T) -> Result<Self> {
        let p = Self { c1, c2, theta, kappa, b, b_prime, theta_prime };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.c1, self.c2, self.theta, self.kappa, self.b, self.b_prime, self.theta_prime];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite coefficient".into()));
        }
        if !(T::zero() < self.c2 && self.c2 < self.c1 && self.c1 < T::one()) {
            return Err(Error::InvalidParams(format!(
                "need 0 < c2 < c1 < 1, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        if self.kappa <= T::zero() {
            return Err(Error::InvalidParams(format!("need kappa > 0, got {}", self.kappa)));
        }
        if self.theta <= T::zero() {
            return Err(Error::InvalidParams(format!("need theta > 0, got {}", self.theta)));
        }
        Ok(())
    }

    pub fn derived(&self) -> DerivedParams<T> {
        let denom = self.theta + self.c1 - self.c2;
        let q = self.theta / denom;
        let two = T::lit(2.0);
        let a_num = two * self.c2 - self.c1;
        DerivedParams {
            q,
            kappa_prime: self.kappa / denom,
            a: if a_num > T::zero() { Some(a_num / denom) } else { None },
            m_q: q.powf(q) * (T::one() - q).powf(T::one() - q),
        }
    }

    /// Like [`derived`](Self::derived) but fails when the annulus constant `a` is undefined.
    pub fn derived_annulus(&self) -> Result<(DerivedParams<T>, T)> {
        let d = self.derived();
        match d.a {
            Some(a) => Ok((d, a)),
            None => Err(Error::InvalidParams(format!(
                "annulus needs 2 c2 - c1 > 0, got c1 = {}, c2 = {}",
                self.c1, self.c2
            ))),
        }
    }
}
