use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{wrap, FieldState};

/// Per-snapshot scalars. Cells at or below the density floor are left out of the
/// shock indicator, the speed estimate and the velocity drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub time: f64,
    pub mass: f64,
    /// Largest pre-projection drift ||u| - 1| since the previous snapshot.
    pub drift: f64,
    pub winding: i64,
    /// Unrounded winding sum; differs from `winding` only by rounding error
    /// unless an increment reached +-pi.
    pub winding_raw: f64,
    pub shock: f64,
    /// Relative L2 distance of rho to the reference, minimised over x2-shifts.
    pub l2: f64,
    /// Phase speed along x2 measured against the previous snapshot.
    pub speed: f64,
    pub dt: f64,
    pub steps: usize,
}

/// Winding of e^{i alpha} along the x2-loop through row nx1/2, as (rounded, raw).
pub fn winding(s: &FieldState) -> (i64, f64) {
    let i = s.nx1 / 2;
    let dz = s.z * s.h2();
    let mut sum = 0.0;
    for j in 0..s.nx2 {
        let k = (j + 1) % s.nx2;
        sum += wrap(s.psi[s.idx(i, k)] - s.psi[s.idx(i, j)] + dz);
    }
    let raw = sum / (2.0 * PI);
    (raw.round() as i64, raw)
}

/// max |u_a - u_b| / h over neighbouring cells that are both above the floor.
pub fn shock_indicator(s: &FieldState, floor: f64) -> f64 {
    let mut m = 0.0f64;
    let diff = |a: usize, b: usize| (s.u1[a] - s.u1[b]).hypot(s.u2[a] - s.u2[b]);
    for i in 0..s.nx1 {
        for j in 0..s.nx2 {
            let a = s.idx(i, j);
            if s.rho[a] <= floor {
                continue;
            }
            let r = s.idx(i, (j + 1) % s.nx2);
            if s.rho[r] > floor {
                m = m.max(diff(a, r) / s.h2());
            }
            if i + 1 < s.nx1 {
                let d = s.idx(i + 1, j);
                if s.rho[d] > floor {
                    m = m.max(diff(a, d) / s.h1());
                }
            }
        }
    }
    m
}

/// ||rho - shift_k(rho_ref)|| / ||rho_ref||, minimised over integer shifts k.
pub fn l2_distance(s: &FieldState, reference: &FieldState) -> f64 {
    assert_eq!((s.nx1, s.nx2), (reference.nx1, reference.nx2), "grids differ");
    let norm: f64 = reference.rho.iter().map(|r| r * r).sum::<f64>().sqrt();
    let mut best = f64::INFINITY;
    for k in 0..s.nx2 {
        let mut acc = 0.0;
        for i in 0..s.nx1 {
            for j in 0..s.nx2 {
                let d = s.rho[s.idx(i, (j + k) % s.nx2)] - reference.rho[s.idx(i, j)];
                acc += d * d;
            }
        }
        best = best.min(acc.sqrt());
    }
    best / norm
}

/// Speed of the phase pattern along x2 between two snapshots: the shift s
/// maximising sum rho cos(alpha_cur(x2 + s) - alpha_prev(x2)), searched
/// within half a spatial period and refined by a parabola through the
/// best three shifts.
pub fn wave_speed(prev: &FieldState, cur: &FieldState, floor: f64) -> f64 {
    let dt = cur.time - prev.time;
    if !(dt > 0.0) || cur.z == 0.0 {
        return f64::NAN;
    }
    let (n1, n2) = (cur.nx1, cur.nx2);
    let h2 = cur.h2();
    let period = ((2.0 * PI / cur.z.abs()) / h2).floor() as i64;
    let half = (period / 2).max(1);
    let corr = |s: i64| -> f64 {
        let mut acc = 0.0;
        for i in 0..n1 {
            for j in 0..n2 {
                let k = cur.idx(i, j);
                if cur.rho[k] <= floor {
                    continue;
                }
                let js = (j as i64 + s).rem_euclid(n2 as i64) as usize;
                let d = cur.psi[cur.idx(i, js)] - prev.psi[k] + cur.z * s as f64 * h2;
                acc += cur.rho[k] * d.cos();
            }
        }
        acc
    };
    let (mut best_s, mut best) = (0i64, f64::NEG_INFINITY);
    for s in -half..=half {
        let c = corr(s);
        if c > best {
            best = c;
            best_s = s;
        }
    }
    let (a, c) = (corr(best_s - 1), corr(best_s + 1));
    let den = a - 2.0 * best + c;
    let frac = if den < 0.0 { 0.5 * (a - c) / den } else { 0.0 };
    (best_s as f64 + frac.clamp(-0.5, 0.5)) * h2 / dt
}

/// Diagnostics of `s`; `prev` feeds the speed, `reference` the L2 distance.
pub fn diagnostics(s: &FieldState, reference: Option<&FieldState>, prev: Option<&FieldState>, floor: f64) -> Diagnostics {
    let (w, raw) = winding(s);
    Diagnostics {
        time: s.time,
        mass: s.mass(),
        drift: 0.0,
        winding: w,
        winding_raw: raw,
        shock: shock_indicator(s, floor),
        l2: reference.map_or(f64::NAN, |r| l2_distance(s, r)),
        speed: prev.map_or(f64::NAN, |p| wave_speed(p, s, floor)),
        dt: f64::NAN,
        steps: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn helix(z: f64, shift: f64, t: f64) -> FieldState {
        let mut s = FieldState::uniform(16, 64, z);
        s.time = t;
        for i in 0..16 {
            for j in 0..64 {
                let k = s.idx(i, j);
                s.psi[k] = wrap(0.3 * i as f64 - z * shift);
            }
        }
        s
    }

    #[test]
    fn winding_of_helix() {
        assert_eq!(winding(&helix(2.0 * PI, 0.0, 0.0)).0, 1);
        assert_eq!(winding(&helix(-4.0 * PI, 0.1, 0.0)).0, -2);
        assert_eq!(winding(&FieldState::uniform(16, 16, 0.0)), (0, 0.0));
    }

    #[test]
    fn speed_of_shifted_helix() {
        let a = helix(2.0 * PI, 0.0, 0.0);
        let b = helix(2.0 * PI, 3.0 / 64.0, 0.5);
        let v = wave_speed(&a, &b, 1e-12);
        assert!((v - 3.0 / 64.0 / 0.5).abs() < 1e-9, "{v}");
    }

    #[test]
    fn l2_shift_invariant() {
        let mut s = FieldState::uniform(16, 32, 0.0);
        for j in 0..32 {
            let k = s.idx(4, j);
            s.rho[k] = 1.0 + (j as f64).sin();
        }
        assert_eq!(l2_distance(&s.shifted(5), &s), 0.0);
        assert!(l2_distance(&FieldState::uniform(16, 32, 0.0), &s) > 0.0);
    }
}
