use serde::{Deserialize, Serialize};

use super::{ClassRange, IntegralConstants, StripProblem, StripWaveSpec, WaveClass};
use crate::error::{Error, NoSolutionReason, Result};
use crate::quad;

/// Relative closeness to 1 of |u2| at the centre that marks a touching wave.
pub const TOUCH_TOL: f64 = 1e-9;

/// Sampled wave on the interior nodes x_i = -1/2 + i/n, i = 1..n-1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StripProfile {
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub beta: Vec<f64>,
    pub dbeta: Vec<f64>,
}

impl StripProfile {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct StripWave {
    pub spec: StripWaveSpec,
    /// ell actually used: equal to the requested one unless it was snapped
    /// onto a critical endpoint within tolerance.
    pub ell: f64,
    pub c: f64,
    pub lambda: f64,
    /// |u2| reaches 1 at the centre and u1 changes sign there.
    pub critical: bool,
    pub range: ClassRange,
    pub constants: IntegralConstants,
    pub mass: f64,
    pub profile: StripProfile,
    problem: StripProblem,
}

fn out_of_range(detail: String) -> Error {
    Error::no_solution(NoSolutionReason::OutOfRange, detail)
}

impl StripWave {
    /// Builds the wave and samples it with `n` intervals (n - 1 interior nodes).
    pub fn build(problem: &StripProblem, spec: StripWaveSpec, n: usize) -> Result<Self> {
        if !(spec.z.is_finite() && spec.z != 0.0) {
            return Err(Error::InvalidParams(format!("winding number Z must be finite and nonzero, got {}", spec.z)));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidParams(format!("profile size must be even and >= 4, got {n}")));
        }
        if !spec.ell.is_finite() {
            return Err(Error::InvalidParams("ell must be finite".into()));
        }
        if spec.class.is_negative() != (spec.ell < 0.0) {
            return Err(out_of_range(format!("class {} does not admit ell = {}", spec.class.name(), spec.ell)));
        }
        let constants = problem.constants()?;
        let range = problem.class_range(spec.class, spec.z, &constants)?;
        let mut la = spec.ell.abs();
        if !range.contains(la, super::RANGE_REL_TOL) {
            return Err(out_of_range(format!(
                "class {}: |ell| = {la} outside [{}, {}]",
                spec.class.name(),
                range.lo,
                range.hi
            )));
        }
        let near = |la: f64, v: f64| (la - v).abs() <= super::RANGE_REL_TOL * v.abs().max(1e-300);
        if let Some(cv) = range.critical {
            if near(la, cv) {
                la = cv;
            }
        }
        if near(la, range.hi) {
            la = range.hi;
        }
        if matches!(spec.class, WaveClass::NegDInc | WaveClass::NegDDec) {
            la = range.lo;
        }
        let ell = if spec.class.is_negative() { -la } else { la };
        let c = problem.solve_c(spec.class, la)?;
        let lambda = -ell * problem.params.b * spec.z;
        let mut wave = StripWave {
            spec,
            ell,
            c,
            lambda,
            critical: false,
            range,
            constants,
            mass: f64::NAN,
            profile: StripProfile::default(),
            problem: problem.clone(),
        };
        let u2c = wave.raw_u2(wave.rho_at(0.0)?);
        wave.critical = matches!(spec.class, WaveClass::Positive | WaveClass::NegA | WaveClass::NegC)
            && u2c.abs() >= 1.0 - TOUCH_TOL;
        if u2c.abs() > 1.0 + 1e-6 {
            return Err(out_of_range(format!("|u2(0)| = {} exceeds 1", u2c.abs())));
        }
        wave.mass = problem.mass_of(spec.class, c, la)?;
        wave.profile = wave.sample(n)?;
        Ok(wave)
    }

    pub fn problem(&self) -> &StripProblem {
        &self.problem
    }

    pub fn rho_at(&self, x: f64) -> Result<f64> {
        self.problem.density(self.spec.class, x, self.c, self.ell.abs())
    }

    fn raw_u2(&self, rho: f64) -> f64 {
        -(self.problem.params.b * self.spec.z / self.problem.params.c1) * (rho + self.ell)
    }

    /// (u1, u2) at x given rho(x).
    pub fn velocity(&self, x: f64, rho: f64) -> (f64, f64) {
        let u2 = self.raw_u2(rho).clamp(-1.0, 1.0);
        let s = self.spec.sign.value();
        let sigma = if self.critical {
            if x == 0.0 {
                return (0.0, u2.signum());
            }
            if x < 0.0 { s } else { -s }
        } else {
            s
        };
        (sigma * (1.0 - u2 * u2).max(0.0).sqrt(), u2)
    }

    /// beta'(x) = -(c1/b) u1 / rho.
    pub fn dbeta_at(&self, x: f64) -> Result<f64> {
        let rho = self.rho_at(x)?;
        let (u1, _) = self.velocity(x, rho);
        Ok(-(self.problem.params.c1 / self.problem.params.b) * u1 / rho)
    }

    /// beta at each of the ascending abscissae `xs`, with beta(0) = 0.
    /// Values past the point where beta stops being integrable are infinite.
    pub fn beta_on(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; xs.len()];
        let split = xs.partition_point(|&x| x < 0.0);
        let tol = 1e-12;
        let mut walk = |idx: &mut dyn Iterator<Item = usize>| -> Result<()> {
            let (mut prev_x, mut acc) = (0.0f64, 0.0f64);
            let mut dead = false;
            for i in idx {
                let x = xs[i];
                if dead || !acc.is_finite() {
                    out[i] = acc;
                    continue;
                }
                let mut bad = false;
                let r = quad::integrate(
                    |s| match self.dbeta_at(s) {
                        Ok(v) if v.is_finite() => v,
                        _ => {
                            bad = true;
                            0.0
                        }
                    },
                    prev_x,
                    x,
                    tol,
                );
                match r {
                    Ok(v) if !bad => acc += v.value,
                    _ => {
                        dead = true;
                        acc = f64::INFINITY * (self.dbeta_at(x).unwrap_or(f64::NAN) * (x - prev_x)).signum();
                    }
                }
                out[i] = acc;
                prev_x = x;
            }
            Ok(())
        };
        walk(&mut (split..xs.len()))?;
        walk(&mut (0..split).rev())?;
        Ok(out)
    }

    fn sample(&self, n: usize) -> Result<StripProfile> {
        let x: Vec<f64> = (1..n).map(|i| -0.5 + i as f64 / n as f64).collect();
        let mut p = StripProfile { x, ..Default::default() };
        for &x in &p.x {
            let rho = self.rho_at(x)?;
            let (u1, u2) = self.velocity(x, rho);
            p.rho.push(rho);
            p.u1.push(u1);
            p.u2.push(u2);
            p.dbeta.push(-(self.problem.params.c1 / self.problem.params.b) * u1 / rho);
        }
        p.beta = self.beta_on(&p.x)?;
        Ok(p)
    }
}
