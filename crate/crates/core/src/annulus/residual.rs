use super::AnnulusProfile;
use crate::error::{Error, Result};
use crate::potential::Confinement;
use crate::strip::ResidualReport;
use crate::{Params, Potential};

/// Finite-difference residuals of the four annular reduced equations on
/// radii within `window` (a fraction of R1 - R0) of the midpoint, skipping
/// a neighbourhood of sign changes of u_r.
pub fn residual_annulus(
    p: &AnnulusProfile,
    params: &Params,
    potential: &Potential,
    m: f64,
    lambda: f64,
    window: f64,
) -> Result<ResidualReport> {
    let n = p.len();
    if n < 5 {
        return Err(Error::Verification("profile too short for residuals".into()));
    }
    let (r0, r1) = potential.domain();
    let w = r1 - r0;
    let mid = 0.5 * (r0 + r1);
    let h = p.r[1] - p.r[0];
    let d = |f: &[f64], i: usize| (f[i + 1] - f[i - 1]) / (2.0 * h);
    let flips: Vec<f64> = (0..n)
        .filter(|&i| p.u_r[i] == 0.0 || (i + 1 < n && p.u_r[i].signum() != p.u_r[i + 1].signum()))
        .map(|i| p.r[i])
        .collect();
    let Params { c1, c2, theta, kappa, b, .. } = *params;
    let bm = b * m;
    let phi: Vec<f64> = (0..n).map(|i| theta * p.rho[i].ln() + kappa * potential.value(p.r[i])).collect();
    let db: Vec<f64> = (0..n).map(|i| if i == 0 || i == n - 1 { f64::NAN } else { d(&p.beta, i) }).collect();
    let flux: Vec<f64> = (0..n).map(|i| p.r[i] * p.rho[i] * (c1 * p.u_r[i] + b * p.rho[i] * db[i])).collect();
    let drift: Vec<f64> = (0..n).map(|i| p.r[i] * c1 * p.rho[i] * p.u_r[i]).collect();
    let drag: Vec<f64> = (0..n).map(|i| p.r[i] * b * p.rho[i] * p.rho[i] * db[i]).collect();
    let mut res = [0.0f64; 4];
    let mut sq = [0.0f64; 4];
    let mut scale = [0.0f64; 4];
    let mut points = 0;
    for i in 2..n - 2 {
        let r = p.r[i];
        if (r - mid).abs() > window * w + 1e-12 || flips.iter().any(|&f| (r - f).abs() < 0.02 * w) {
            continue;
        }
        points += 1;
        let (rho, ur, ut) = (p.rho[i], p.u_r[i], p.u_theta[i]);
        let wv = c2 * ur + b * rho * db[i];
        let dphi = d(&phi, i);
        let (dur, dut) = (d(&p.u_r, i), d(&p.u_theta, i));
        let exact = [
            d(&flux, i),
            wv * dur - ut / r * (c2 * ut + bm / r * rho) + ut * ut * dphi,
            wv * dut + ur / r * (c2 * ut + bm / r * rho) - ur * ut * dphi,
            -m * lambda + (c1 * ur + b * rho * db[i]) * db[i] + m / r * (c1 * ut + bm / r * rho),
        ];
        // each scale is the sum of the magnitudes of the individual monomials
        let pot = theta * d(&p.rho, i).abs() / rho + kappa * potential.d1(r).abs();
        let wa = (c2 * ur).abs() + (b * rho * db[i]).abs();
        let ia = (c2 * ut).abs() + (bm / r * rho).abs();
        let mags = [
            d(&drift, i).abs() + d(&drag, i).abs(),
            wa * dur.abs() + (ut / r).abs() * ia + ut * ut * pot,
            wa * dut.abs() + (ur / r).abs() * ia + (ur * ut).abs() * pot,
            (m * lambda).abs() + ((c1 * ur).abs() + (b * rho * db[i]).abs()) * db[i].abs() + (m / r).abs() * ((c1 * ut).abs() + (bm / r * rho).abs()),
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
