use serde::{Deserialize, Serialize};

use super::diag::{diagnostics, Diagnostics};
use super::scheme::step;
use super::{FieldState, SolverConfig};
use crate::error::{Error, Result};
use crate::{Params, Potential};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    BlowUp { time: f64, detail: String },
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub status: RunStatus,
    /// Last accepted state; for a blow-up, the state before the failed step.
    pub state: FieldState,
    pub diagnostics: Vec<Diagnostics>,
    pub steps: usize,
    /// First snapshot time at which the shock indicator exceeded
    /// `shock_factor` times its initial value.
    pub shock_time: Option<f64>,
    /// First snapshot time before the shock flag at which the winding index
    /// left its initial value.
    pub winding_lost: Option<f64>,
}

impl RunReport {
    pub fn blew_up(&self) -> bool {
        matches!(self.status, RunStatus::BlowUp { .. })
    }
}

const GROW: f64 = 1.1;

/// Advances `initial` to `config.t_end`, calling `observe` on every snapshot
/// (t = 0, each multiple of `output_every`, the final or blow-up state).
/// The L2 distance is measured against the initial state.
pub fn run<F>(config: &SolverConfig, initial: FieldState, params: &Params, potential: &Potential, mut observe: F) -> Result<RunReport>
where
    F: FnMut(&FieldState, &Diagnostics) -> Result<()>,
{
    config.validate()?;
    initial.validate()?;
    if (initial.nx1, initial.nx2) != (config.nx1, config.nx2) {
        return Err(Error::InvalidParams(format!(
            "state grid {} x {} does not match config {} x {}",
            initial.nx1, initial.nx2, config.nx1, config.nx2
        )));
    }
    let params = config.effective_params(params);
    let floor = config.rho_floor;
    let reference = initial.clone();
    let mut state = initial;
    let mut prev = state.clone();
    let first = diagnostics(&state, Some(&reference), None, floor);
    observe(&state, &first)?;
    let shock0 = first.shock;
    let w0 = first.winding;
    let mut report = RunReport {
        status: RunStatus::Completed,
        state: state.clone(),
        diagnostics: vec![first],
        steps: 0,
        shock_time: None,
        winding_lost: None,
    };

    let t0 = state.time;
    let mut k = 1u64;
    let mut cap = f64::INFINITY;
    let (mut drift, mut dt_last, mut steps_since) = (0.0f64, f64::NAN, 0usize);
    let end = t0 + config.t_end;
    while state.time < end {
        let target = (t0 + k as f64 * config.output_every).min(end);
        let blow = loop {
            if state.time >= target {
                break None;
            }
            let remaining = target - state.time;
            match step(&mut state, &params, potential, config, cap.min(remaining)) {
                Ok(info) => {
                    report.steps += 1;
                    steps_since += 1;
                    drift = drift.max(info.drift);
                    dt_last = info.dt;
                    cap = if info.rejected > 0 { info.dt * GROW } else { cap * GROW };
                    // land exactly on the snapshot time
                    if target - state.time <= 1e-12 * target.abs().max(1.0) {
                        state.time = target;
                    }
                }
                Err(Error::BlowUp { time, detail }) => break Some((time, detail)),
                Err(e) => return Err(e),
            }
        };
        let mut d = diagnostics(&state, Some(&reference), Some(&prev), floor);
        d.drift = drift;
        d.dt = dt_last;
        d.steps = steps_since;
        if report.shock_time.is_none() && d.shock >= config.shock_factor * shock0 {
            report.shock_time = Some(d.time);
        }
        if report.shock_time.is_none() && report.winding_lost.is_none() && d.winding != w0 {
            report.winding_lost = Some(d.time);
        }
        observe(&state, &d)?;
        report.diagnostics.push(d);
        log::debug!("t = {:.4} mass = {:.15} shock = {:.3e} l2 = {:.3e} dt = {:.2e}", d.time, d.mass, d.shock, d.l2, d.dt);
        if let Some((time, detail)) = blow {
            report.status = RunStatus::BlowUp { time, detail };
            break;
        }
        prev = state.clone();
        drift = 0.0;
        steps_since = 0;
        k += 1;
    }
    report.state = state;
    Ok(report)
}
