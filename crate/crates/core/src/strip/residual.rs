use serde::{Deserialize, Serialize};

use super::StripProfile;
use crate::error::{Error, Result};
use crate::potential::Confinement;
use crate::{Params, Potential};

/// Largest residual of each reduced equation over the window, each divided by
/// the largest sum of the magnitudes of that equation's monomials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub per_equation: [f64; 4],
    /// Discrete L2 norms over the window, scaled like `per_equation`.
    pub l2: [f64; 4],
    pub max: f64,
    pub points: usize,
}

const FLIP_GAP: f64 = 0.02;

/// Finite-difference residuals of the reduced travelling-wave equations on
/// |x| <= `window`, skipping a neighbourhood of any sign change of u1.
pub fn residual_strip(
    p: &StripProfile,
    params: &Params,
    potential: &Potential,
    z: f64,
    lambda: f64,
    window: f64,
) -> Result<ResidualReport> {
    let n = p.len();
    if n < 5 {
        return Err(Error::Verification("profile too short for residuals".into()));
    }
    let h = p.x[1] - p.x[0];
    let d = |f: &[f64], i: usize| (f[i + 1] - f[i - 1]) / (2.0 * h);
    let flips: Vec<f64> = (0..n - 1)
        .filter(|&i| p.u1[i] != 0.0 && p.u1[i + 1] != 0.0 && p.u1[i].signum() != p.u1[i + 1].signum())
        .map(|i| 0.5 * (p.x[i] + p.x[i + 1]))
        .chain((0..n).filter(|&i| p.u1[i] == 0.0).map(|i| p.x[i]))
        .collect();
    let Params { c1, c2, theta, kappa, b, .. } = *params;
    let phi: Vec<f64> = (0..n).map(|i| theta * p.rho[i].ln() + kappa * potential.value(p.x[i])).collect();
    let db: Vec<f64> = (0..n).map(|i| if i == 0 || i == n - 1 { f64::NAN } else { d(&p.beta, i) }).collect();
    let flux: Vec<f64> = (0..n).map(|i| p.rho[i] * (c1 * p.u1[i] + b * p.rho[i] * db[i])).collect();
    let drift: Vec<f64> = (0..n).map(|i| c1 * p.rho[i] * p.u1[i]).collect();
    let drag: Vec<f64> = (0..n).map(|i| b * p.rho[i] * p.rho[i] * db[i]).collect();
    let mut res = [0.0f64; 4];
    let mut sq = [0.0f64; 4];
    let mut scale = [0.0f64; 4];
    let mut points = 0;
    for i in 2..n - 2 {
        let x = p.x[i];
        if x.abs() > window + 1e-12 || flips.iter().any(|&f| (x - f).abs() < FLIP_GAP) {
            continue;
        }
        points += 1;
        let (rho, u1, u2) = (p.rho[i], p.u1[i], p.u2[i]);
        let w = c2 * u1 + b * rho * db[i];
        let dphi = d(&phi, i);
        let (du1, du2) = (d(&p.u1, i), d(&p.u2, i));
        let exact = [
            d(&flux, i),
            w * du1 + u2 * u2 * dphi,
            w * du2 - u1 * u2 * dphi,
            -lambda * z + (c1 * u1 + b * rho * db[i]) * db[i] + (c1 * u2 + b * rho * z) * z,
        ];
        // each scale is the sum of the magnitudes of the individual monomials
        let pot = theta * d(&p.rho, i).abs() / rho + kappa * potential.d1(x).abs();
        let wa = (c2 * u1).abs() + (b * rho * db[i]).abs();
        let mags = [
            d(&drift, i).abs() + d(&drag, i).abs(),
            wa * du1.abs() + u2 * u2 * pot,
            wa * du2.abs() + (u1 * u2).abs() * pot,
            (lambda * z).abs()
                + ((c1 * u1).abs() + (b * rho * db[i]).abs()) * db[i].abs()
                + ((c1 * u2).abs() + (b * rho * z).abs()) * z.abs(),
        ];
        for k in 0..4 {
            res[k] = res[k].max(exact[k].abs());
            sq[k] += h * exact[k] * exact[k];
            scale[k] = scale[k].max(mags[k]);
        }
    }
    if points == 0 {
        return Err(Error::Verification("no profile points inside the residual window".into()));
    }
    let mut per_equation = [0.0; 4];
    let mut l2 = [0.0; 4];
    for k in 0..4 {
        let s = if scale[k] > 0.0 { scale[k] } else { 1.0 };
        per_equation[k] = res[k] / s;
        l2[k] = sq[k].sqrt() / s;
        if per_equation[k].is_nan() {
            return Err(Error::Verification(format!("residual of equation {} is not finite", k + 1)));
        }
    }
    let max = per_equation.iter().cloned().fold(0.0, f64::max);
    Ok(ResidualReport { per_equation, l2, max, points })
}

/// Sup-norm symmetry defects of u1 and beta under x -> -x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reflection {
    pub u1_even: f64,
    pub u1_odd: f64,
    pub beta_even: f64,
    pub beta_odd: f64,
}

/// Reflection defects on a symmetric grid; beta is compared on |x| <= `window`.
pub fn reflection_norms(p: &StripProfile, window: f64) -> Reflection {
    let n = p.len();
    let mut r = Reflection { u1_even: 0.0, u1_odd: 0.0, beta_even: 0.0, beta_odd: 0.0 };
    for i in 0..n {
        let j = n - 1 - i;
        r.u1_even = r.u1_even.max((p.u1[i] - p.u1[j]).abs());
        r.u1_odd = r.u1_odd.max((p.u1[i] + p.u1[j]).abs());
        if p.x[i].abs() <= window {
            r.beta_even = r.beta_even.max((p.beta[i] - p.beta[j]).abs());
            r.beta_odd = r.beta_odd.max((p.beta[i] + p.beta[j]).abs());
        }
    }
    r
}
