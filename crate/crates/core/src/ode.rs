//! Adaptive Dormand–Prince 5(4) integration of small systems.

use crate::error::{Error, Result};
use crate::real::Real;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Dopri<T, const N: usize> {
    pub rtol: T,
    pub atol: [T; N],
    pub h_init: T,
    pub max_steps: usize,
}

#[derive(Debug, Clone)]
pub struct OdeRun<T, const N: usize> {
    /// States at the requested output abscissae that were reached.
    pub samples: Vec<(T, [T; N])>,
    /// Last accepted state.
    pub last: (T, [T; N]),
    /// True when the guard stopped the integration before `x_end`.
    pub guarded: bool,
    pub steps: usize,
}

impl<T: Real, const N: usize> Dopri<T, N> {
    pub fn new(rtol: T, atol: [T; N]) -> Self {
        Self { rtol, atol, h_init: T::lit(1e-4), max_steps: 1_000_000 }
    }

    /// Integrates from `x0` towards `x_end`, landing exactly on each of
    /// `outputs` (ordered in the direction of travel). Stops early after the
    /// first accepted step at which `guard` holds.
    pub fn solve<F, G>(&self, mut f: F, x0: T, y0: [T; N], x_end: T, outputs: &[T], mut guard: G) -> Result<OdeRun<T, N>>
    where
        F: FnMut(T, &[T; N]) -> [T; N],
        G: FnMut(T, &[T; N]) -> bool,
    {
        let dir = if x_end >= x0 { T::one() } else { -T::one() };
        let span = (x_end - x0).abs();
        let mut h = self.h_init.min(span).max(T::min_positive_value());
        let mut x = x0;
        let mut y = y0;
        let mut k0 = f(x, &y);
        let mut samples = Vec::with_capacity(outputs.len());
        let mut next_out = 0;
        while next_out < outputs.len() && (outputs[next_out] - x0) * dir <= T::zero() {
            if outputs[next_out] == x0 {
                samples.push((x0, y0));
            }
            next_out += 1;
        }
        let mut steps = 0;
        let tiny = T::lit(64.0) * T::epsilon();
        while (x_end - x) * dir > tiny * (T::one() + x.abs()) {
            if steps >= self.max_steps {
                return Err(Error::Integration { at: x.to_f64().unwrap_or(f64::NAN), detail: "step budget exhausted".into() });
            }
            let target = if next_out < outputs.len() { outputs[next_out] } else { x_end };
            let remaining = (target - x).abs();
            let mut landing = false;
            if h >= remaining {
                h = remaining;
                landing = true;
            }
            let (y_new, err, k_last) = self.step(&mut f, x, &y, &k0, h * dir);
            let ok = err <= T::one() && y_new.iter().all(|v| v.is_finite());
            if ok {
                steps += 1;
                x = if landing { target } else { x + h * dir };
                y = y_new;
                k0 = k_last;
                if landing && next_out < outputs.len() {
                    samples.push((x, y));
                    next_out += 1;
                }
                if guard(x, &y) {
                    return Ok(OdeRun { samples, last: (x, y), guarded: true, steps });
                }
            }
            let fac = if err == T::zero() || !err.is_finite() {
                if ok { T::lit(5.0) } else { T::lit(0.2) }
            } else {
                (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2)).min(T::lit(5.0))
            };
            let h_next = h * fac;
            if !ok && h_next <= tiny * (T::one() + x.abs()) {
                return Err(Error::Integration { at: x.to_f64().unwrap_or(f64::NAN), detail: "step size underflow".into() });
            }
            if landing && ok {
                // keep the step that the controller wanted before it was clipped
                h = h_next.max(h);
            } else {
                h = h_next;
            }
        }
        Ok(OdeRun { samples, last: (x, y), guarded: false, steps })
    }

    fn step<F>(&self, f: &mut F, x: T, y: &[T; N], k0: &[T; N], h: T) -> ([T; N], T, [T; N])
    where
        F: FnMut(T, &[T; N]) -> [T; N],
    {
        let mut k = [[T::zero(); N]; 7];
        k[0] = *k0;
        for s in 1..7 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = T::lit(A[s][j]);
                if a != T::zero() {
                    for i in 0..N {
                        ys[i] = ys[i] + h * a * kj[i];
                    }
                }
            }
            k[s] = f(x + h * T::lit(C[s]), &ys);
        }
        let mut y5 = *y;
        let mut err = T::zero();
        for i in 0..N {
            let mut d5 = T::zero();
            let mut d4 = T::zero();
            for s in 0..7 {
                d5 = d5 + T::lit(B5[s]) * k[s][i];
                d4 = d4 + T::lit(B4[s]) * k[s][i];
            }
            y5[i] = y[i] + h * d5;
            let sc = self.atol[i] + self.rtol * y[i].abs().max(y5[i].abs());
            let e = (h * (d5 - d4)).abs() / sc;
            if !(e <= err) {
                err = e;
            }
        }
        (y5, err, k[6])
    }
}
