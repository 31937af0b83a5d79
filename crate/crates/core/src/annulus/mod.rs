//! Travelling waves in the annulus R0 < r < R1, rotating with angular number m.

mod residual;
mod signmap;

pub use residual::residual_annulus;
pub use signmap::{sign_region_map, Region, SignRegionMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, NoSolutionReason, Result};
use crate::ode::Dopri;
use crate::potential::{validate_annulus, Confinement};
use crate::quad;
use crate::roots::brent;
use crate::strip::Sign;
use crate::{Derived, Params, Potential};

/// Density below this fraction of rho* ends the integration towards a wall.
pub const GUARD_REL: f64 = 1e-14;
/// Closest approach to a wall, as a fraction of R1 - R0.
pub const WALL_OFFSET: f64 = 1e-6;
/// |u_theta| this close to 1 marks a touching point.
pub const TOUCH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusWaveSpec {
    pub m: f64,
    /// ell = -lambda / (b m) >= 0.
    pub ell: f64,
    pub sign: Sign,
}

/// Potential-dependent radii and integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusGeometry {
    pub r0: f64,
    pub r1: f64,
    pub r_star: f64,
    pub r_plus: f64,
    /// 2 pi int e^{-k'V} r dr.
    pub i1: f64,
    /// 2 pi int e^{-k'V/q} r dr.
    pub iq: f64,
    /// e^{a (R1 - R0) / (q R0)}.
    pub c_env: f64,
}

#[derive(Debug, Clone)]
pub struct AnnulusProblem {
    pub params: Params,
    pub derived: Derived,
    pub a: f64,
    pub potential: Potential,
    pub geometry: AnnulusGeometry,
    pub rtol: f64,
}

/// Result of shooting from (r0, rho~(r0)) towards both walls.
#[derive(Debug, Clone)]
pub struct Shot {
    pub r0: f64,
    pub rho_star: f64,
    pub mass: f64,
    /// (r, rho, B) at the requested radii that were reached, ascending.
    pub samples: Vec<(f64, f64, f64)>,
    /// Radii where integration stopped on each side.
    pub guard: (f64, f64),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnulusProfile {
    pub r: Vec<f64>,
    pub rho: Vec<f64>,
    pub u_r: Vec<f64>,
    pub u_theta: Vec<f64>,
    pub beta: Vec<f64>,
    pub dbeta: Vec<f64>,
}

impl AnnulusProfile {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct AnnulusWave {
    pub spec: AnnulusWaveSpec,
    pub ell: f64,
    pub ell_star: f64,
    pub lambda: f64,
    pub r_ell: f64,
    pub rho_star: f64,
    pub mass: f64,
    /// Upper bound for the mass left out beyond the guard radii.
    pub tail_bound: f64,
    pub guard: (f64, f64),
    pub critical: bool,
    pub touch_points: Vec<f64>,
    /// Number of local maxima of |u_theta| with value above 1 - 1e-3.
    pub u_theta_maxima: usize,
    pub profile: AnnulusProfile,
}

fn grid(r0: f64, r1: f64, n: usize) -> Vec<f64> {
    (1..n).map(|i| r0 + (r1 - r0) * i as f64 / n as f64).collect()
}

impl AnnulusProblem {
    pub fn new(params: Params, potential: Potential) -> Result<Self> {
        params.validate()?;
        let (derived, a) = params.derived_annulus()?;
        if potential.is_strip() {
            return Err(Error::InvalidParams("annular waves need an annular potential".into()));
        }
        let r_star = validate_annulus(&potential, 4000)?;
        let (r0, r1) = potential.domain();
        let kp = derived.kappa_prime;
        let target = a / kp;
        let w = r1 - r0;
        let r_plus = brent(|r| Ok(r * potential.d1(r) - target), r_star, r1 - 1e-12 * w, 1e-16 * r1, 300)?;
        let i1 = 2.0 * std::f64::consts::PI
            * quad::integrate(|r| (-kp * potential.value(r)).exp() * r, r0, r1, 1e-12)?.value;
        let iq = 2.0 * std::f64::consts::PI
            * quad::integrate(|r| (-kp * potential.value(r) / derived.q).exp() * r, r0, r1, 1e-12)?.value;
        let c_env = (a * w / (derived.q * r0)).exp();
        Ok(Self {
            params,
            derived,
            a,
            potential,
            geometry: AnnulusGeometry { r0, r1, r_star, r_plus, i1, iq, c_env },
            rtol: 1e-11,
        })
    }

    /// rho~(r) = ell r (a / (k' V'(r)) - r), where the ODE right-hand side vanishes.
    pub fn tilde_rho(&self, r: f64, ell: f64) -> f64 {
        ell * r * (self.a / (self.derived.kappa_prime * self.potential.d1(r)) - r)
    }

    /// rho' for ell >= 0.
    pub fn rhs(&self, r: f64, rho: f64, ell: f64) -> f64 {
        let q = self.derived.q;
        let kp = self.derived.kappa_prime;
        rho / (rho + q * ell * r * r) * (self.a * ell * r - (rho + ell * r * r) * kp * self.potential.d1(r))
    }

    /// Existence condition |bm| / (c1 I1 R0) <= 1.
    pub fn check_existence(&self, m: f64) -> Result<()> {
        let bm = (self.params.b * m).abs();
        if bm == 0.0 || !m.is_finite() {
            return Err(Error::InvalidParams("annular waves need b m != 0".into()));
        }
        let v = bm / (self.params.c1 * self.geometry.i1 * self.geometry.r0);
        if v > 1.0 {
            return Err(Error::no_solution(NoSolutionReason::AnnulusBound, format!("|bm|/(c1 I1 R0) = {v} > 1")));
        }
        Ok(())
    }

    /// The ell = 0 density e^{-k'V} / I1.
    pub fn rho_zero(&self, r: f64) -> f64 {
        (-self.derived.kappa_prime * self.potential.value(r)).exp() / self.geometry.i1
    }

    /// Integrates from (r0, rho~(r0)) to both walls. `outputs` must be ascending.
    /// With `m` given, also accumulates B with B' = sqrt(1 - u_theta^2) / rho.
    pub fn shoot(&self, r0: f64, ell: f64, outputs: &[f64], m: Option<f64>) -> Result<Shot> {
        let g = &self.geometry;
        let rho_star = self.tilde_rho(r0, ell);
        if !(rho_star > 0.0) || !rho_star.is_finite() {
            return Err(Error::Domain(format!("rho~({r0}) = {rho_star} is not a positive starting value")));
        }
        let q = self.derived.q;
        let kp = self.derived.kappa_prime;
        let a = self.a;
        let two_pi = 2.0 * std::f64::consts::PI;
        let coup = (self.params.b * m.unwrap_or(0.0) / self.params.c1).abs();
        let f = |r: f64, y: &[f64; 3]| {
            let rho = y[0].exp();
            let dv = self.potential.d1(r);
            let dl = (a * ell * r - (rho + ell * r * r) * kp * dv) / (rho + q * ell * r * r);
            let ut = coup * (rho / r + ell * r);
            [dl, two_pi * rho * r, (1.0 - ut * ut).max(0.0).sqrt() / rho]
        };
        let b_tol = if m.is_some() { 1e-12 } else { f64::INFINITY };
        let ode = Dopri::new(self.rtol, [1e-12, 1e-15, b_tol]);
        let ln_guard = (GUARD_REL * rho_star).ln();
        let w = g.r1 - g.r0;
        let y0 = [rho_star.ln(), 0.0, 0.0];
        let split = outputs.partition_point(|&r| r < r0);
        let left_out: Vec<f64> = outputs[..split].iter().rev().cloned().collect();
        let right_out: Vec<f64> = outputs[split..].iter().filter(|&&r| r > r0).cloned().collect();
        let left = ode.solve(f, r0, y0, g.r0 + WALL_OFFSET * w, &left_out, |_, y| y[0] < ln_guard)?;
        let right = ode.solve(f, r0, y0, g.r1 - WALL_OFFSET * w, &right_out, |_, y| y[0] < ln_guard)?;
        let mut samples: Vec<(f64, f64, f64)> =
            left.samples.iter().rev().map(|(r, y)| (*r, y[0].exp(), y[2])).collect();
        if outputs.contains(&r0) {
            samples.push((r0, rho_star, 0.0));
        }
        samples.extend(right.samples.iter().map(|(r, y)| (*r, y[0].exp(), y[2])));
        Ok(Shot {
            r0,
            rho_star,
            mass: right.last.1[1] - left.last.1[1],
            samples,
            guard: (left.last.0, right.last.0),
        })
    }

    /// Total mass I(r0, ell) of the trajectory through (r0, rho~(r0)).
    pub fn mass_from(&self, r0: f64, ell: f64) -> Result<f64> {
        Ok(self.shoot(r0, ell, &[], None)?.mass)
    }

    /// The starting radius r_ell in (R*, R+) whose trajectory has mass 1.
    pub fn solve_r_ell(&self, ell: f64) -> Result<f64> {
        self.solve_r_ell_in(ell, None)
    }

    /// As [`solve_r_ell`](Self::solve_r_ell), optionally starting from a given bracket.
    pub fn solve_r_ell_in(&self, ell: f64, bracket: Option<(f64, f64)>) -> Result<f64> {
        if !(ell > 0.0) {
            return Err(Error::Domain(format!("shooting needs ell > 0, got {ell}")));
        }
        let g = &self.geometry;
        let span = g.r_plus - g.r_star;
        let f = |r: f64| Ok(self.mass_from(r, ell)?.ln());
        let (mut lo, mut hi) = bracket.unwrap_or((g.r_star + 0.5 * span, g.r_plus - 1e-9 * span));
        let mut k = 1;
        while f(lo)? <= 0.0 {
            hi = lo;
            lo = g.r_star + span * 0.5f64.powi(k);
            k += 1;
            if k > 60 {
                return Err(Error::no_solution(NoSolutionReason::Normalisation, "no mass-one trajectory near R*"));
            }
        }
        let mut k = 1;
        while f(hi)? >= 0.0 {
            lo = hi;
            hi = g.r_plus - span * 0.5f64.powi(k + 2);
            k += 1;
            if k > 60 {
                return Err(Error::no_solution(NoSolutionReason::Normalisation, "no mass-one trajectory near R+"));
            }
        }
        brent(f, lo, hi, 1e-15 * g.r1, 300)
    }

    /// v*_ell = sup_r (rho_ell(r)/r + ell r), including the limit ell R1 at the outer wall.
    pub fn v_star(&self, ell: f64) -> Result<f64> {
        let g = &self.geometry;
        if ell == 0.0 {
            let out = grid(g.r0, g.r1, 4000);
            let vmax = out.iter().map(|&r| self.rho_zero(r) / r).fold(0.0, f64::max);
            return Ok(vmax);
        }
        let r0 = self.solve_r_ell(ell)?;
        let out = grid(g.r0, g.r1, 4000);
        let shot = self.shoot(r0, ell, &out, None)?;
        let v: Vec<f64> = shot.samples.iter().map(|&(r, rho, _)| rho / r + ell * r).collect();
        let mut best = ell * g.r1;
        for i in 0..v.len() {
            if v[i] > best {
                best = v[i];
                if i > 0 && i + 1 < v.len() {
                    // vertex of the parabola through three equally spaced points
                    let (a, b, c) = (v[i - 1], v[i], v[i + 1]);
                    let den = a - 2.0 * b + c;
                    if den < 0.0 && b >= a && b >= c {
                        best = best.max(b - (c - a) * (c - a) / (8.0 * den));
                    }
                }
            }
        }
        Ok(best)
    }

    /// Smallest ell in [0, ell0] with v*_ell = c1 / |b m|, by bisection.
    pub fn ell_star(&self, m: f64) -> Result<f64> {
        self.check_existence(m)?;
        let bm = (self.params.b * m).abs();
        let target = self.params.c1 / bm;
        let ell0 = 2.0 * self.params.c1 / (self.geometry.r1 * bm);
        let (mut lo, mut hi) = (0.0, ell0);
        if self.v_star(0.0)? >= target {
            return Ok(0.0);
        }
        while hi - lo > 1e-11 * ell0 {
            let mid = 0.5 * (lo + hi);
            if self.v_star(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

impl AnnulusWave {
    /// Builds the wave and samples it on r_i = R0 + i (R1 - R0)/n, i = 1..n-1,
    /// dropping radii beyond the guard.
    pub fn build(problem: &AnnulusProblem, spec: AnnulusWaveSpec, n: usize) -> Result<Self> {
        Self::build_with_star(problem, spec, n, None)
    }

    /// As [`build`](Self::build) with a precomputed ell*.
    pub fn build_with_star(problem: &AnnulusProblem, spec: AnnulusWaveSpec, n: usize, ell_star: Option<f64>) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidParams(format!("profile size must be >= 4, got {n}")));
        }
        if !(spec.ell >= 0.0) || !spec.ell.is_finite() {
            return Err(Error::no_solution(NoSolutionReason::OutOfRange, format!("annular waves need ell >= 0, got {}", spec.ell)));
        }
        let ell_star = match ell_star {
            Some(s) => s,
            None => problem.ell_star(spec.m)?,
        };
        problem.check_existence(spec.m)?;
        let mut ell = spec.ell;
        let snap = 1e-9 * ell_star.max(1e-300);
        if ell > ell_star + snap {
            return Err(Error::no_solution(NoSolutionReason::OutOfRange, format!("ell = {ell} exceeds ell* = {ell_star}")));
        }
        if (ell - ell_star).abs() <= snap {
            ell = ell_star;
        }
        let g = problem.geometry;
        let Params { c1, b, .. } = problem.params;
        let bm = b * spec.m;
        let coup = (bm / c1).abs();
        let base = grid(g.r0, g.r1, n);
        let r_ell = if ell == 0.0 { g.r_star } else { problem.solve_r_ell(ell)? };
        let run = |extra: &[f64]| -> Result<(f64, f64, (f64, f64), Vec<(f64, f64, f64)>)> {
            let mut out = base.clone();
            out.extend_from_slice(extra);
            out.sort_by(|x, y| x.partial_cmp(y).unwrap());
            out.dedup();
            if ell == 0.0 {
                let rho_star = problem.rho_zero(g.r_star);
                let samples: Vec<_> = out
                    .iter()
                    .map(|&r| (r, problem.rho_zero(r), f64::NAN))
                    .filter(|s| s.1 >= GUARD_REL * rho_star)
                    .collect();
                let guard = (samples.first().map_or(g.r0, |s| s.0), samples.last().map_or(g.r1, |s| s.0));
                let mass = 2.0
                    * std::f64::consts::PI
                    * quad::integrate(|r| problem.rho_zero(r) * r, g.r0, g.r1, 1e-12)?.value;
                Ok((rho_star, mass, guard, samples))
            } else {
                let shot = problem.shoot(r_ell, ell, &out, Some(spec.m))?;
                Ok((shot.rho_star, shot.mass, shot.guard, shot.samples))
            }
        };
        let (rho_star, mass, guard, first) = run(&[g.r_star])?;
        // |u_theta| = coup (rho/r + ell r); refine each local maximum with a parabola
        let ua: Vec<f64> = first.iter().map(|&(r, rho, _)| coup * (rho / r + ell * r)).collect();
        if let Some(bad) = ua.iter().position(|u| *u > 1.0 + TOUCH_TOL) {
            return Err(Error::no_solution(
                NoSolutionReason::OutOfRange,
                format!("|u_theta| = {} > 1 at r = {}", ua[bad], first[bad].0),
            ));
        }
        let mut touch_points = Vec::new();
        let mut maxima = 0;
        for i in 1..ua.len().saturating_sub(1) {
            let (l, c, r) = (ua[i - 1], ua[i], ua[i + 1]);
            if !(c >= l && c > r) {
                continue;
            }
            let (hl, hr) = (first[i].0 - first[i - 1].0, first[i + 1].0 - first[i].0);
            let (sl, sr) = ((c - l) / hl, (r - c) / hr);
            let curv = (sr - sl) / (0.5 * (hl + hr));
            let (peak_r, peak) = if curv < 0.0 {
                let slope0 = 0.5 * (sl + sr) - 0.25 * curv * (hr - hl);
                let dx = (-slope0 / curv).clamp(-hl, hr);
                (first[i].0 + dx, c + slope0 * dx + 0.5 * curv * dx * dx)
            } else {
                (first[i].0, c)
            };
            if peak > 1.0 - 1e-3 {
                maxima += 1;
            }
            if peak >= 1.0 - TOUCH_TOL {
                touch_points.push(peak_r);
            }
        }
        let mut extra = vec![g.r_star];
        extra.extend_from_slice(&touch_points);
        let mut samples = if touch_points.is_empty() { first } else { run(&extra)?.3 };
        let critical = !touch_points.is_empty();
        let s = spec.sign.value();
        let sigma_of = |r: f64| {
            if touch_points.contains(&r) {
                return 0.0;
            }
            let passed = touch_points.iter().filter(|&&t| t < r).count();
            if passed % 2 == 0 { s } else { -s }
        };
        let u_theta_of = |r: f64, rho: f64| -(bm / (c1 * r)) * (rho + ell * r * r);
        let mut u_r = Vec::with_capacity(samples.len());
        let mut u_t = Vec::with_capacity(samples.len());
        let mut dbeta = Vec::with_capacity(samples.len());
        for &(r, rho, _) in &samples {
            let sg = sigma_of(r);
            let mut ut = u_theta_of(r, rho).clamp(-1.0, 1.0);
            if sg == 0.0 {
                ut = ut.signum();
            }
            let ur = sg * (1.0 - ut * ut).max(0.0).sqrt();
            u_r.push(ur);
            u_t.push(ut);
            dbeta.push(-(c1 / b) * ur / rho);
        }
        // beta = -(c1/b) int_{R*}^r sigma dB with B' = sqrt(1 - u_theta^2)/rho,
        // accumulated outwards from R* so that interior values keep full precision
        let mut beta = vec![0.0; samples.len()];
        let star = samples.iter().position(|s| s.0 == g.r_star).unwrap_or(0);
        let seg: Box<dyn Fn(usize) -> f64> = if ell == 0.0 {
            let f = move |r: f64| {
                let rho = problem.rho_zero(r);
                let u = u_theta_of(r, rho).clamp(-1.0, 1.0);
                sigma_of(r) * (1.0 - u * u).max(0.0).sqrt() / rho
            };
            let samples = &samples;
            Box::new(move |i: usize| {
                quad::integrate(f, samples[i - 1].0, samples[i].0, 1e-12).map_or(f64::INFINITY, |q| q.value)
            })
        } else {
            let samples = &samples;
            let sigma_of = &sigma_of;
            Box::new(move |i: usize| {
                let mid = 0.5 * (samples[i - 1].0 + samples[i].0);
                sigma_of(mid) * (samples[i].2 - samples[i - 1].2)
            })
        };
        for i in star + 1..samples.len() {
            beta[i] = beta[i - 1] - (c1 / b) * seg(i);
        }
        for i in (0..star).rev() {
            beta[i] = beta[i + 1] + (c1 / b) * seg(i + 1);
        }
        drop(seg);
        // drop the auxiliary radii that are not on the uniform grid
        let keep: Vec<bool> = samples.iter().map(|s| base.contains(&s.0)).collect();
        let filt = |v: Vec<f64>| -> Vec<f64> { v.into_iter().zip(&keep).filter(|(_, k)| **k).map(|(x, _)| x).collect() };
        let (u_r, u_t, dbeta, beta) = (filt(u_r), filt(u_t), filt(dbeta), filt(beta));
        samples.retain(|s| base.contains(&s.0));
        let profile = AnnulusProfile {
            r: samples.iter().map(|s| s.0).collect(),
            rho: samples.iter().map(|s| s.1).collect(),
            u_r,
            u_theta: u_t,
            beta,
            dbeta,
        };
        let tail_bound = 2.0 * std::f64::consts::PI * GUARD_REL * rho_star * g.r1 * ((guard.0 - g.r0) + (g.r1 - guard.1));
        Ok(AnnulusWave {
            spec,
            ell,
            ell_star,
            lambda: -bm * ell,
            r_ell,
            rho_star,
            mass,
            tail_bound,
            guard,
            critical,
            touch_points: touch_points.clone(),
            u_theta_maxima: maxima,
            profile,
        })
    }
}
