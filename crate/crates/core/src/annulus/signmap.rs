use serde::{Deserialize, Serialize};

use super::AnnulusProblem;
use crate::potential::Confinement;

/// Where a point (r, rho) sits relative to the zero set of the ODE right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// rho' > 0.
    Increasing,
    /// rho' < 0.
    Decreasing,
    /// On the curve where rho' = 0.
    Curve,
}

impl Region {
    pub fn sign(self) -> i8 {
        match self {
            Region::Increasing => 1,
            Region::Decreasing => -1,
            Region::Curve => 0,
        }
    }
}

/// Tri-state sign of rho' over a rectangular (r, rho) grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignRegionMap {
    pub ell: f64,
    pub r: Vec<f64>,
    pub rho: Vec<f64>,
    /// Row-major over (r, rho): `sign[i * rho.len() + j]`.
    pub sign: Vec<i8>,
    /// Samples of the zero curve rho~ (or rho^ for ell < 0) where it is positive.
    pub curve: Vec<(f64, f64)>,
    /// Samples of the singular curve rho = q |ell| r^2 (ell < 0 only).
    pub singular: Vec<(f64, f64)>,
}

impl SignRegionMap {
    pub fn sign_at(&self, i: usize, j: usize) -> i8 {
        self.sign[i * self.rho.len() + j]
    }
}

impl AnnulusProblem {
    /// Sign of rho' at (r, rho) from the right-hand side itself.
    /// For ell < 0 this is rho / (rho - q |ell| r^2) times the ell-reflected bracket.
    pub fn rhs_sign(&self, r: f64, rho: f64, ell: f64) -> i8 {
        let q = self.derived.q;
        let kp = self.derived.kappa_prime;
        let dv = self.potential.d1(r);
        let v = if ell >= 0.0 {
            self.rhs(r, rho, ell)
        } else {
            let lt = -ell;
            rho / (rho - q * lt * r * r) * (-self.a * lt * r - (rho - lt * r * r) * kp * dv)
        };
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    }

    /// Region of (r, rho), rho > 0, read off from the geometry of the zero curve.
    pub fn classify(&self, r: f64, rho: f64, ell: f64) -> Region {
        let g = &self.geometry;
        if ell > 0.0 {
            if r <= g.r_star {
                return Region::Increasing;
            }
            if r >= g.r_plus {
                return Region::Decreasing;
            }
            let c = self.tilde_rho(r, ell);
            if rho < c {
                Region::Increasing
            } else if rho > c {
                Region::Decreasing
            } else {
                Region::Curve
            }
        } else {
            let lt = -ell;
            let s = rho - self.derived.q * lt * r * r;
            // the bracket is -k'V' (rho - rho^) with rho^ = -ell~ r (a/(k'V') - r)
            let hat = -lt * r * (self.a / (self.derived.kappa_prime * self.potential.d1(r)) - r);
            let above = (rho - hat).signum();
            let bracket = if r < g.r_star {
                above
            } else if r <= g.r_plus {
                -1.0
            } else {
                -above
            };
            let v = bracket * s.signum();
            if v > 0.0 {
                Region::Increasing
            } else if v < 0.0 {
                Region::Decreasing
            } else {
                Region::Curve
            }
        }
    }
}

/// Tri-state sign map on `nr` x `nrho` nodes with rho in (0, `rho_max`].
/// A node is 0 when the zero curve passes within half a rho-step of it.
pub fn sign_region_map(p: &AnnulusProblem, ell: f64, nr: usize, nrho: usize, rho_max: f64) -> SignRegionMap {
    let g = &p.geometry;
    let w = g.r1 - g.r0;
    let r: Vec<f64> = (0..nr).map(|i| g.r0 + w * (i as f64 + 0.5) / nr as f64).collect();
    let rho: Vec<f64> = (0..nrho).map(|j| rho_max * (j as f64 + 1.0) / nrho as f64).collect();
    let drho = rho_max / nrho as f64;
    let q = p.derived.q;
    let zero = |ri: f64| -> Option<f64> {
        let c = if ell >= 0.0 {
            p.tilde_rho(ri, ell)
        } else {
            -(-ell) * ri * (p.a / (p.derived.kappa_prime * p.potential.d1(ri)) - ri)
        };
        (c > 0.0 && c.is_finite()).then_some(c)
    };
    let mut sign = Vec::with_capacity(nr * nrho);
    for &ri in &r {
        let c = zero(ri);
        for &rj in &rho {
            let s = match c {
                Some(c) if (rj - c).abs() <= 0.5 * drho => 0,
                _ => p.rhs_sign(ri, rj, ell),
            };
            sign.push(s);
        }
    }
    let curve = r.iter().filter_map(|&ri| zero(ri).map(|c| (ri, c))).collect();
    let singular = if ell < 0.0 { r.iter().map(|&ri| (ri, q * -ell * ri * ri)).collect() } else { Vec::new() };
    SignRegionMap { ell, r, rho, sign, curve, singular }
}
