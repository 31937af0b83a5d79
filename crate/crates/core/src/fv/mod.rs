//! Explicit finite-volume solver for the full system on the periodic strip
//! (-1/2, 1/2) x (0, 1).

mod diag;
mod run;
mod scheme;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::strip::StripWave;
use crate::Params;

pub use diag::{diagnostics, l2_distance, shock_indicator, wave_speed, winding, Diagnostics};
pub use run::{run, RunReport, RunStatus};
pub use scheme::{stable_dt, step, StepInfo};

/// Wraps an angle into (-pi, pi].
pub fn wrap(a: f64) -> f64 {
    let y = a.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// No mass flux through x1 = +-1/2, one-sided differences for u and psi.
    #[default]
    ZeroFlux,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Three-stage strong-stability-preserving Runge-Kutta.
    #[default]
    SspRk3,
    ForwardEuler,
}

/// Overrides of the phase-equation coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    pub b_prime: f64,
    pub theta_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub nx1: usize,
    pub nx2: usize,
    #[serde(default = "defaults::cfl")]
    pub cfl: f64,
    pub t_end: f64,
    /// Time between snapshots.
    #[serde(default = "defaults::output_every")]
    pub output_every: f64,
    #[serde(default = "defaults::rho_floor")]
    pub rho_floor: f64,
    #[serde(default)]
    pub noise: Option<Noise>,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub integrator: Integrator,
    /// Largest accepted ||u| - 1| before renormalisation.
    #[serde(default = "defaults::max_drift")]
    pub max_drift: f64,
    /// Steps shorter than this count as a blow-up.
    #[serde(default = "defaults::dt_min")]
    pub dt_min: f64,
    /// Growth of the shock indicator over its initial value that raises the shock flag.
    #[serde(default = "defaults::shock_factor")]
    pub shock_factor: f64,
}

mod defaults {
    pub fn cfl() -> f64 {
        0.4
    }
    pub fn output_every() -> f64 {
        0.1
    }
    pub fn rho_floor() -> f64 {
        1e-12
    }
    pub fn max_drift() -> f64 {
        1e-2
    }
    pub fn dt_min() -> f64 {
        1e-9
    }
    pub fn shock_factor() -> f64 {
        10.0
    }
}

impl SolverConfig {
    pub fn new(nx1: usize, nx2: usize, t_end: f64) -> Self {
        Self {
            nx1,
            nx2,
            cfl: defaults::cfl(),
            t_end,
            output_every: defaults::output_every(),
            rho_floor: defaults::rho_floor(),
            noise: None,
            boundary: Boundary::ZeroFlux,
            integrator: Integrator::SspRk3,
            max_drift: defaults::max_drift(),
            dt_min: defaults::dt_min(),
            shock_factor: defaults::shock_factor(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.nx1 < 16 || self.nx2 < 16 {
            return bad(format!("grid sizes must be >= 16, got {} x {}", self.nx1, self.nx2));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be finite and >= 0, got {}", self.t_end));
        }
        if !(self.output_every > 0.0) {
            return bad(format!("output_every must be positive, got {}", self.output_every));
        }
        if !(self.rho_floor > 0.0 && self.rho_floor < 1e-3) {
            return bad(format!("rho_floor must lie in (0, 1e-3), got {}", self.rho_floor));
        }
        if !(self.max_drift > 0.0 && self.dt_min > 0.0 && self.shock_factor > 1.0) {
            return bad("max_drift, dt_min must be positive and shock_factor > 1".into());
        }
        Ok(())
    }

    /// Model parameters with the noise overrides applied.
    pub fn effective_params(&self, p: &Params) -> Params {
        let mut p = *p;
        if let Some(n) = self.noise {
            p.b_prime = n.b_prime;
            p.theta_prime = n.theta_prime;
        }
        p
    }
}

/// Cell averages on an nx1 x nx2 grid, stored row-major with x2 fastest.
/// The phase is alpha = psi + Z x2. `lift` counts whole turns, so that
/// psi + 2 pi lift is continuous across x1 even where the phase winds by
/// more than pi per cell near the walls.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub nx1: usize,
    pub nx2: usize,
    pub time: f64,
    pub z: f64,
    pub rho: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub psi: Vec<f64>,
    pub lift: Vec<i64>,
}

impl FieldState {
    pub fn h1(&self) -> f64 {
        1.0 / self.nx1 as f64
    }

    pub fn h2(&self) -> f64 {
        1.0 / self.nx2 as f64
    }

    pub fn x1(&self, i: usize) -> f64 {
        -0.5 + (i as f64 + 0.5) * self.h1()
    }

    pub fn x2(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h2()
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nx2 + j
    }

    /// psi + 2 pi lift at cell k.
    pub fn phase(&self, k: usize) -> f64 {
        self.psi[k] + 2.0 * PI * self.lift[k] as f64
    }

    /// Stores an unwrapped phase value at cell k.
    pub fn set_phase(&mut self, k: usize, a: f64) {
        let w = wrap(a);
        self.psi[k] = w;
        self.lift[k] = ((a - w) / (2.0 * PI)).round() as i64;
    }

    pub fn mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.h1() * self.h2()
    }

    /// Uniform state rho = 1, u = e2, psi = 0.
    pub fn uniform(nx1: usize, nx2: usize, z: f64) -> Self {
        let n = nx1 * nx2;
        Self { nx1, nx2, time: 0.0, z, rho: vec![1.0; n], u1: vec![0.0; n], u2: vec![1.0; n], psi: vec![0.0; n], lift: vec![0; n] }
    }

    /// Periodic shift by k cells in x2: the value at j moves to j + k.
    pub fn shifted(&self, k: usize) -> Self {
        let mut s = self.clone();
        for i in 0..self.nx1 {
            for j in 0..self.nx2 {
                let (a, b) = (self.idx(i, j), self.idx(i, (j + k) % self.nx2));
                s.rho[b] = self.rho[a];
                s.u1[b] = self.u1[a];
                s.u2[b] = self.u2[a];
                s.psi[b] = self.psi[a];
                s.lift[b] = self.lift[a];
            }
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nx1 * self.nx2;
        if [&self.rho, &self.u1, &self.u2, &self.psi].iter().any(|v| v.len() != n) || self.lift.len() != n {
            return Err(Error::Format(format!("field planes must hold {n} values")));
        }
        if self.nx1 < 2 || self.nx2 < 2 {
            return Err(Error::InvalidParams("grid too small".into()));
        }
        if (self.z * self.h2()).abs() >= PI {
            return Err(Error::InvalidParams(format!("|Z| h2 must be < pi, got {}", self.z * self.h2())));
        }
        Ok(())
    }
}

/// Samples the wave at cell centres at time t with phase
/// psi + 2 pi lift = beta(x1) - lambda t Z. Cells where beta is not finite get psi = 0.
pub fn sample_wave_2d(wave: &StripWave, nx1: usize, nx2: usize, t: f64) -> Result<FieldState> {
    let mut s = FieldState::uniform(nx1, nx2, wave.spec.z);
    s.time = t;
    s.validate()?;
    let xs: Vec<f64> = (0..nx1).map(|i| s.x1(i)).collect();
    let beta = wave.beta_on(&xs)?;
    let shift = wave.lambda * t * wave.spec.z;
    for (i, &x) in xs.iter().enumerate() {
        let rho = wave.rho_at(x)?;
        let (u1, u2) = wave.velocity(x, rho);
        let phase = if beta[i].is_finite() { beta[i] - shift } else { 0.0 };
        for j in 0..nx2 {
            let k = s.idx(i, j);
            s.rho[k] = rho;
            s.u1[k] = u1;
            s.u2[k] = u2;
            s.set_phase(k, phase);
        }
    }
    Ok(s)
}

/// Initial state for the solver: the sampled wave with rho raised to the
/// floor and zero phase where it was below.
pub fn init_from_wave(wave: &StripWave, config: &SolverConfig) -> Result<FieldState> {
    config.validate()?;
    let mut s = sample_wave_2d(wave, config.nx1, config.nx2, 0.0)?;
    for k in 0..s.rho.len() {
        if s.rho[k] < config.rho_floor {
            s.rho[k] = config.rho_floor;
            s.set_phase(k, 0.0);
        }
    }
    Ok(s)
}
