use super::{wrap, FieldState, Integrator, SolverConfig};
use crate::error::{Error, Result};
use crate::potential::Confinement;
use crate::{Params, Potential};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub dt: f64,
    /// Largest ||u| - 1| before renormalisation over the updated cells.
    pub drift: f64,
    /// Attempts thrown away because of drift or negative density.
    pub rejected: usize,
}

/// Quantities of the old state shared by every trial step.
struct Frozen {
    /// x1-faces: (nx1 - 1) x nx2, face between rows i and i + 1.
    f1: Vec<f64>,
    /// x2-faces: nx1 x nx2, face between columns j and j + 1 (periodic).
    f2: Vec<f64>,
    du1: Vec<f64>,
    du2: Vec<f64>,
    dpsi: Vec<f64>,
    /// Largest transport or characteristic speed.
    speed: f64,
}

fn one_sided(n: usize, i: usize) -> (usize, usize, f64) {
    if i == 0 {
        (0, 1, 1.0)
    } else if i == n - 1 {
        (n - 2, n - 1, 1.0)
    } else {
        (i - 1, i + 1, 2.0)
    }
}

/// Density paired with a phase increment across a face: the reciprocal of
/// the logarithmic mean of 1/rho, exact when rho is exponential between the
/// two centres, so that rho d(alpha) stays accurate where the phase winds
/// like 1/rho near the walls.
fn face_density(a: f64, c: f64) -> f64 {
    if a <= 0.0 || c <= 0.0 {
        return 0.0;
    }
    let r = a / c;
    if (r - 1.0).abs() < 1e-4 {
        // series of the mean around a = c
        let m = 0.5 * (a + c);
        let d = (a - c) / m;
        return m * (1.0 - d * d / 12.0);
    }
    a * c * r.ln() / (a - c)
}

/// Time derivatives of the old state; independent of dt, so rejected trials
/// only redo the cheap update.
fn rates(s: &FieldState, p: &Params, v: &Potential, floor: f64) -> Frozen {
    let (n1, n2) = (s.nx1, s.nx2);
    let (h1, h2) = (s.h1(), s.h2());
    let Params { c1, c2, theta, kappa, b, b_prime, theta_prime } = *p;
    let at = |i: usize, j: usize| i * n2 + j;
    let right = |j: usize| if j + 1 == n2 { 0 } else { j + 1 };
    let left = |j: usize| if j == 0 { n2 - 1 } else { j - 1 };
    let mut speed = 0.0f64;

    // faces: phase gradient g, rho g and the mean velocity component; the
    // phase of cells below the floor is ignored
    let m1 = (n1 - 1) * n2;
    let (mut g1, mut r1, mut v1) = (vec![0.0; m1], vec![0.0; m1], vec![0.0; m1]);
    let mut f1 = vec![0.0; m1];
    for i in 0..n1 - 1 {
        for j in 0..n2 {
            let (a, c, f) = (at(i, j), at(i + 1, j), at(i, j));
            if s.rho[a] > floor && s.rho[c] > floor {
                g1[f] = (s.phase(c) - s.phase(a)) / h1;
            }
            r1[f] = face_density(s.rho[a], s.rho[c]) * g1[f];
            v1[f] = 0.5 * (s.u1[a] + s.u1[c]);
            let w = c1 * v1[f] + b * r1[f];
            speed = speed.max(w.abs());
            f1[f] = w * if w > 0.0 { s.rho[a] } else { s.rho[c] };
        }
    }
    let m2 = n1 * n2;
    let (mut g2, mut r2, mut v2) = (vec![0.0; m2], vec![0.0; m2], vec![0.0; m2]);
    let mut f2 = vec![0.0; m2];
    for i in 0..n1 {
        for j in 0..n2 {
            let (a, c, f) = (at(i, j), at(i, right(j)), at(i, j));
            g2[f] = if s.rho[a] > floor && s.rho[c] > floor { wrap(s.psi[c] - s.psi[a]) / h2 } else { 0.0 } + s.z;
            r2[f] = face_density(s.rho[a], s.rho[c]) * g2[f];
            v2[f] = 0.5 * (s.u2[a] + s.u2[c]);
            let w = c1 * v2[f] + b * r2[f];
            speed = speed.max(w.abs());
            f2[f] = w * if w > 0.0 { s.rho[a] } else { s.rho[c] };
        }
    }

    let phi: Vec<f64> = (0..n1 * n2)
        .map(|k| theta * s.rho[k].max(floor).ln() + kappa * v.value(s.x1(k / n2)))
        .collect();
    let mut du1 = vec![0.0; n1 * n2];
    let mut du2 = vec![0.0; n1 * n2];
    let mut dpsi = vec![0.0; n1 * n2];
    for i in 0..n1 {
        let (lo, hi, k) = one_sided(n1, i);
        for j in 0..n2 {
            let c = at(i, j);
            if s.rho[c] <= floor {
                continue;
            }
            let (rho, u1, u2) = (s.rho[c], s.u1[c], s.u2[c]);
            let (jl, jr) = (at(i, left(j)), at(i, right(j)));
            // faces around the cell; at a wall only the inner x1-face exists
            let (fs, fn_) = (if i > 0 { Some(at(i - 1, j)) } else { None }, if i + 1 < n1 { Some(c) } else { None });
            let (fw, fe) = (jl, c);
            let rc1 = match (fs, fn_) {
                (Some(a), Some(b)) => 0.5 * (r1[a] + r1[b]),
                (Some(a), None) | (None, Some(a)) => r1[a],
                (None, None) => 0.0,
            };
            let rc2 = 0.5 * (r2[fw] + r2[fe]);

            // u: advection by c2 u + b rho grad(alpha), upwinded
            let (w1, w2) = (c2 * u1 + b * rc1, c2 * u2 + b * rc2);
            let up1 = |f: &[f64]| -> f64 {
                if (w1 > 0.0 && i > 0) || i == n1 - 1 {
                    (f[c] - f[at(i - 1, j)]) / h1
                } else {
                    (f[at(i + 1, j)] - f[c]) / h1
                }
            };
            let up2 = |f: &[f64]| -> f64 { if w2 > 0.0 { (f[c] - f[jl]) / h2 } else { (f[jr] - f[c]) / h2 } };
            let dphi1 = (phi[at(hi, j)] - phi[at(lo, j)]) / (k * h1);
            let dphi2 = (phi[jr] - phi[jl]) / (2.0 * h2);
            let along = u1 * dphi1 + u2 * dphi2;
            du1[c] = -(w1 * up1(&s.u1) + w2 * up2(&s.u1)) - (dphi1 - along * u1);
            du2[c] = -(w1 * up1(&s.u2) + w2 * up2(&s.u2)) - (dphi2 - along * u2);

            // psi: Hamiltonian (c1 u + b' rho grad(alpha)) . grad(alpha) taken on
            // the face upwind for the characteristic speed c1 u + 2 b' rho grad(alpha)
            let a1 = c1 * u1 + 2.0 * b_prime * rc1;
            let a2 = c1 * u2 + 2.0 * b_prime * rc2;
            let f = match (fs, fn_) {
                (Some(x), Some(y)) => Some(if a1 > 0.0 { x } else { y }),
                (x, y) => x.or(y),
            };
            let h_1 = f.map_or(0.0, |f| (c1 * v1[f] + b_prime * r1[f]) * g1[f]);
            let f = if a2 > 0.0 { fw } else { fe };
            let h_2 = (c1 * v2[f] + b_prime * r2[f]) * g2[f];
            speed = speed.max(w1.abs()).max(w2.abs()).max(a1.abs()).max(a2.abs());
            let mut rate = -(h_1 + h_2);
            if theta_prime != 0.0 {
                // div(rho grad rho) with zero flux through the walls
                let flux = |a: usize, c: usize| 0.5 * (s.rho[a] + s.rho[c]) * (s.rho[c] - s.rho[a]);
                let mut d = (flux(c, jr) - flux(jl, c)) / (h2 * h2);
                if i + 1 < n1 {
                    d += flux(c, at(i + 1, j)) / (h1 * h1);
                }
                if i > 0 {
                    d -= flux(at(i - 1, j), c) / (h1 * h1);
                }
                rate += theta_prime * d / rho.max(floor);
            }
            dpsi[c] = rate;
        }
    }
    Frozen { f1, f2, du1, du2, dpsi, speed: speed + theta.sqrt() }
}

/// Largest stable step for the state: the transport bound
/// cfl * min(h) / speed and, when theta' != 0, the bound keeping the
/// dispersive mode of the rho-phase coupling inside the stability region.
pub fn stable_dt(s: &FieldState, p: &Params, v: &Potential, config: &SolverConfig) -> f64 {
    let p = config.effective_params(p);
    limit(s, &p, &rates(s, &p, v, config.rho_floor), config.cfl)
}

fn limit(s: &FieldState, p: &Params, fr: &Frozen, cfl: f64) -> f64 {
    let (h1, h2) = (s.h1(), s.h2());
    let transport = cfl * h1.min(h2) / fr.speed;
    let rho_max = s.rho.iter().cloned().fold(0.0, f64::max);
    let omega = (p.b * p.theta_prime).abs().sqrt() * rho_max * 4.0 * (1.0 / (h1 * h1) + 1.0 / (h2 * h2));
    if omega > 0.0 {
        transport.min(cfl * 3f64.sqrt() / omega)
    } else {
        transport
    }
}

/// One forward Euler stage from `s` with frozen rates. None if a density
/// turns negative; otherwise the stage state and its largest velocity drift.
fn euler(s: &FieldState, fr: &Frozen, dt: f64, floor: f64) -> Option<(FieldState, f64)> {
    let (n1, n2) = (s.nx1, s.nx2);
    let (h1, h2) = (s.h1(), s.h2());
    let mut out = s.clone();
    let mut drift = 0.0f64;
    for i in 0..n1 {
        for j in 0..n2 {
            let c = i * n2 + j;
            let fl = if i > 0 { fr.f1[(i - 1) * n2 + j] } else { 0.0 };
            let fr1 = if i + 1 < n1 { fr.f1[c] } else { 0.0 };
            let fd = fr.f2[if j > 0 { c - 1 } else { c + n2 - 1 }];
            let r = s.rho[c] - dt * ((fr1 - fl) / h1 + (fr.f2[c] - fd) / h2);
            if !(r >= 0.0) {
                return None;
            }
            out.rho[c] = r;
            if s.rho[c] <= floor {
                continue;
            }
            let (a, b) = (s.u1[c] + dt * fr.du1[c], s.u2[c] + dt * fr.du2[c]);
            let norm = a.hypot(b);
            drift = drift.max((norm - 1.0).abs());
            out.u1[c] = a / norm;
            out.u2[c] = b / norm;
            out.set_phase(c, s.phase(c) + dt * fr.dpsi[c]);
        }
    }
    Some((out, drift))
}

/// w * a + (1 - w) * b with the velocity projected back onto the unit circle.
fn blend(a: &FieldState, b: &FieldState, w: f64) -> (FieldState, f64) {
    let mut out = b.clone();
    let mut drift = 0.0f64;
    for k in 0..a.rho.len() {
        out.rho[k] = w * a.rho[k] + (1.0 - w) * b.rho[k];
        let (x, y) = (w * a.u1[k] + (1.0 - w) * b.u1[k], w * a.u2[k] + (1.0 - w) * b.u2[k]);
        let norm = x.hypot(y);
        drift = drift.max((norm - 1.0).abs());
        out.u1[k] = x / norm;
        out.u2[k] = y / norm;
        out.set_phase(k, w * a.phase(k) + (1.0 - w) * b.phase(k));
    }
    (out, drift)
}

/// Advances `s` by one step of the configured integrator, no longer than `dt_max`. The step is halved while
/// the velocity drifts off the unit circle or a density turns negative.
/// The state is untouched on error.
pub fn step(s: &mut FieldState, p: &Params, v: &Potential, config: &SolverConfig, dt_max: f64) -> Result<StepInfo> {
    let floor = config.rho_floor;
    let fr = rates(s, p, v, floor);
    if !fr.speed.is_finite() {
        return Err(Error::BlowUp { time: s.time, detail: "non-finite transport speed".into() });
    }
    let mut dt = limit(s, p, &fr, config.cfl).min(dt_max);
    let mut rejected = 0;
    loop {
        if !(dt >= config.dt_min) {
            return Err(Error::BlowUp {
                time: s.time,
                detail: format!("time step {dt:e} fell below {:e} after {rejected} rejections", config.dt_min),
            });
        }
        let trial = match config.integrator {
            Integrator::SspRk3 => stages(s, p, v, &fr, dt, floor),
            Integrator::ForwardEuler => euler(s, &fr, dt, floor),
        };
        if let Some((next, drift)) = trial {
            if !drift.is_finite() || next.psi.iter().any(|x| !x.is_finite()) {
                return Err(Error::BlowUp { time: s.time, detail: "non-finite velocity or phase".into() });
            }
            if drift <= config.max_drift {
                let time = s.time + dt;
                *s = next;
                s.time = time;
                return Ok(StepInfo { dt, drift, rejected });
            }
        }
        rejected += 1;
        dt *= 0.5;
    }
}

fn stages(s: &FieldState, p: &Params, v: &Potential, fr: &Frozen, dt: f64, floor: f64) -> Option<(FieldState, f64)> {
    let (s1, d1) = euler(s, fr, dt, floor)?;
    let (e2, d2) = euler(&s1, &rates(&s1, p, v, floor), dt, floor)?;
    let (s2, d3) = blend(s, &e2, 0.75);
    let (e3, d4) = euler(&s2, &rates(&s2, p, v, floor), dt, floor)?;
    let (s3, d5) = blend(s, &e3, 1.0 / 3.0);
    Some((s3, d1.max(d2).max(d3).max(d4).max(d5)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fv::SolverConfig;
    use std::f64::consts::PI;

    fn flat() -> (Params, Potential) {
        (Params::new(0.5, 0.4, 0.1, 0.1, -0.03267, -0.03267, -0.0003267).unwrap(), Potential::Flat)
    }

    #[test]
    fn uniform_state_is_steady() {
        let (p, v) = flat();
        let cfg = SolverConfig::new(16, 16, 1.0);
        let mut s = FieldState::uniform(16, 16, 0.0);
        let s0 = s.clone();
        for _ in 0..5 {
            step(&mut s, &p, &v, &cfg, 1.0).unwrap();
            for k in 0..s.rho.len() {
                assert!((s.rho[k] - s0.rho[k]).abs() <= 1e-13);
                assert!((s.u1[k] - s0.u1[k]).abs() <= 1e-13 && (s.u2[k] - s0.u2[k]).abs() <= 1e-13);
                assert!((s.psi[k] - s0.psi[k]).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn uniform_winding_state_only_rotates_phase() {
        let (p, v) = flat();
        let cfg = SolverConfig::new(16, 16, 1.0);
        let mut s = FieldState::uniform(16, 16, 2.0 * PI);
        let s0 = s.clone();
        step(&mut s, &p, &v, &cfg, 1.0).unwrap();
        assert_eq!(s.rho, s0.rho);
        assert_eq!(s.u1, s0.u1);
        assert_eq!(s.u2, s0.u2);
        let expect = wrap(-(p.c1 + p.b_prime * s.z) * s.z * s.time);
        assert!(s.psi.iter().all(|&x| (x - expect).abs() < 1e-13));
    }

    #[test]
    fn step_respects_cap() {
        let (p, v) = flat();
        let cfg = SolverConfig::new(16, 16, 1.0);
        let mut s = FieldState::uniform(16, 16, 2.0 * PI);
        let info = step(&mut s, &p, &v, &cfg, 1e-4).unwrap();
        assert_eq!(info.dt, 1e-4);
        assert_eq!(s.time, 1e-4);
        assert!(stable_dt(&s, &p, &v, &cfg) > 1e-4);
    }
}
