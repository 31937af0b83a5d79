use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use swarmwave::annulus::{residual_annulus, sign_region_map, AnnulusProblem, AnnulusWave, AnnulusWaveSpec};
use swarmwave::fv::{init_from_wave, run, RunStatus, SolverConfig};
use swarmwave::io::{self, DiagnosticsWriter, ProfileTable};
use swarmwave::strip::{reflection_norms, residual_strip, StripProblem, StripProfile, StripWave, StripWaveSpec, WaveClass};
use swarmwave::{Error, Params, Potential};

use crate::config::{AnnulusConfig, RunConfig, ScanKind, SimulateConfig, StripConfig, Tolerances};
use crate::CliError;

fn strip_problem(cfg: &RunConfig) -> Result<StripProblem, CliError> {
    let t = cfg.tolerances;
    Ok(StripProblem::new(cfg.params()?, cfg.strip_potential())?.with_tolerances(t.quad, t.root))
}

fn build_strip(cfg: &RunConfig, sc: &StripConfig) -> Result<(StripProblem, StripWave, Option<f64>), CliError> {
    let problem = strip_problem(cfg)?;
    if sc.ell_fraction.is_some() && sc.class != WaveClass::Positive {
        return Err(CliError::Config("`ell_fraction` is only defined for the positive class".into()));
    }
    let star = if sc.class == WaveClass::Positive { problem.ell_star(sc.z).ok() } else { None };
    let ell = sc.ell_choice().resolve(|| problem.ell_star(sc.z))?;
    let spec = StripWaveSpec { z: sc.z, ell, class: sc.class, sign: sc.sign };
    let wave = StripWave::build(&problem, spec, sc.samples)?;
    Ok((problem, wave, star))
}

fn strip_metadata(cfg: &RunConfig, problem: &StripProblem, wave: &StripWave, star: Option<f64>, samples: usize) -> Result<Value, CliError> {
    let t = cfg.tolerances;
    let residual = residual_strip(&wave.profile, &problem.params, &problem.potential, wave.spec.z, wave.lambda, t.strip_window)?;
    Ok(json!({
        "kind": "strip",
        "config": cfg,
        "params": problem.params,
        "derived": problem.derived,
        "potential": problem.potential,
        "spec": wave.spec,
        "samples": samples,
        "ell": wave.ell,
        "ell_star": star,
        "c": wave.c,
        "lambda": wave.lambda,
        "critical": wave.critical,
        "mass": wave.mass,
        "range": wave.range,
        "constants": wave.constants,
        "residual_window": t.strip_window,
        "residual": residual,
        "reflection": reflection_norms(&wave.profile, t.strip_window),
        "tolerances": { "quad": problem.quad_tol, "root": problem.root_tol },
    }))
}

pub fn strip(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let sc = cfg.strip.clone().unwrap_or_default();
    let (problem, wave, star) = build_strip(cfg, &sc)?;
    let meta = strip_metadata(cfg, &problem, &wave, star, sc.samples)?;
    io::write_profile(out, "strip", &ProfileTable::from_strip(&wave.profile), &meta)?;
    log::info!("strip wave: ell = {}, lambda = {}, critical = {}", wave.ell, wave.lambda, wave.critical);
    Ok(())
}

fn annulus_problem(cfg: &RunConfig) -> Result<AnnulusProblem, CliError> {
    Ok(AnnulusProblem::new(cfg.params()?, cfg.annulus_potential())?)
}

fn build_annulus(cfg: &RunConfig, ac: &AnnulusConfig) -> Result<(AnnulusProblem, AnnulusWave), CliError> {
    let problem = annulus_problem(cfg)?;
    let star = problem.ell_star(ac.m)?;
    let ell = ac.ell_choice().resolve(|| Ok(star))?;
    let spec = AnnulusWaveSpec { m: ac.m, ell, sign: ac.sign };
    let wave = AnnulusWave::build_with_star(&problem, spec, ac.samples, Some(star))?;
    Ok((problem, wave))
}

fn annulus_metadata(cfg: &RunConfig, problem: &AnnulusProblem, wave: &AnnulusWave, samples: usize) -> Result<Value, CliError> {
    let t = cfg.tolerances;
    let residual = residual_annulus(&wave.profile, &problem.params, &problem.potential, wave.spec.m, wave.lambda, t.annulus_window)?;
    Ok(json!({
        "kind": "annulus",
        "config": cfg,
        "params": problem.params,
        "derived": problem.derived,
        "potential": problem.potential,
        "geometry": problem.geometry,
        "spec": wave.spec,
        "samples": samples,
        "ell": wave.ell,
        "ell_star": wave.ell_star,
        "lambda": wave.lambda,
        "r_ell": wave.r_ell,
        "rho_star": wave.rho_star,
        "mass": wave.mass,
        "tail_bound": wave.tail_bound,
        "guard": wave.guard,
        "critical": wave.critical,
        "touch_points": wave.touch_points,
        "u_theta_maxima": wave.u_theta_maxima,
        "residual_window": t.annulus_window,
        "residual": residual,
        "tolerances": { "rtol": problem.rtol },
    }))
}

pub fn annulus(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let ac = cfg.annulus.clone().unwrap_or_default();
    let (problem, wave) = build_annulus(cfg, &ac)?;
    let mut meta = annulus_metadata(cfg, &problem, &wave, ac.samples)?;
    if let Some(sm) = ac.sign_map {
        let ell = sm.ell.unwrap_or(wave.ell);
        let top = wave.profile.rho.iter().cloned().fold(0.0, f64::max);
        let rho_max = sm.rho_max.unwrap_or(1.5 * top);
        if sm.nr < 2 || sm.nrho < 2 || !(rho_max > 0.0) {
            return Err(CliError::Config("sign map needs nr, nrho >= 2 and rho_max > 0".into()));
        }
        let map = sign_region_map(&problem, ell, sm.nr, sm.nrho, rho_max);
        io::write_sign_map(BufWriter::new(File::create(out.join("signmap.csv"))?), &map)?;
        io::write_sign_curves(BufWriter::new(File::create(out.join("signmap_curves.csv"))?), &map)?;
        let count = |s: i8| map.sign.iter().filter(|&&v| v == s).count();
        meta["sign_map"] = json!({
            "ell": ell,
            "nr": sm.nr,
            "nrho": sm.nrho,
            "rho_max": rho_max,
            "cells": { "increasing": count(1), "decreasing": count(-1), "curve": count(0) },
            "singular_points": map.singular.len(),
        });
    }
    io::write_profile(out, "annulus", &ProfileTable::from_annulus(&wave.profile), &meta)?;
    log::info!("annular wave: ell = {}, ell* = {}, critical = {}", wave.ell, wave.ell_star, wave.critical);
    Ok(())
}

fn solver_config(sc: &SimulateConfig, t_end: f64) -> SolverConfig {
    let mut c = SolverConfig::new(sc.nx1, sc.nx2, t_end);
    let set = |dst: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    set(&mut c.output_every, sc.output_every);
    set(&mut c.cfl, sc.cfl);
    set(&mut c.rho_floor, sc.rho_floor);
    set(&mut c.max_drift, sc.max_drift);
    set(&mut c.dt_min, sc.dt_min);
    set(&mut c.shock_factor, sc.shock_factor);
    if let Some(i) = sc.integrator {
        c.integrator = i;
    }
    c.noise = sc.noise;
    c
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let preset = cfg.preset()?;
    let params = cfg.params()?;
    let sc = cfg.simulate.clone().unwrap_or_default();
    let t_end = sc.t_end.or(preset.map(|p| p.t_end())).unwrap_or(2.0);
    let solver = solver_config(&sc, t_end);
    solver.validate()?;
    let potential = cfg.strip_potential();

    let (initial, wave_info) = match &sc.initial {
        Some(path) => {
            let (_, s) = io::read_snapshot(std::io::BufReader::new(File::open(path)?))?;
            if (s.nx1, s.nx2) != (solver.nx1, solver.nx2) {
                return Err(CliError::Config(format!(
                    "snapshot grid {} x {} differs from the configured {} x {}",
                    s.nx1, s.nx2, solver.nx1, solver.nx2
                )));
            }
            (s, json!({ "snapshot": path }))
        }
        None => {
            let mut wc = sc.wave.clone().unwrap_or_default();
            if wc.ell.is_none() && wc.ell_fraction.is_none() {
                wc.ell_fraction = Some(1.0);
            }
            let (_, wave, _) = build_strip(cfg, &wc)?;
            let info = json!({ "spec": wave.spec, "ell": wave.ell, "lambda": wave.lambda, "critical": wave.critical });
            (init_from_wave(&wave, &solver)?, info)
        }
    };

    let diag_path = out.join("diagnostics.csv");
    if diag_path.exists() {
        std::fs::remove_file(&diag_path)?;
    }
    let snap_dir = out.join("snapshots");
    if snap_dir.exists() {
        std::fs::remove_dir_all(&snap_dir)?;
    }
    if sc.snapshots {
        std::fs::create_dir_all(&snap_dir)?;
    }
    let mut diag = DiagnosticsWriter::append(&diag_path)?;
    let header = json!({ "params": params, "solver": solver });
    let mut index = 0usize;
    let report = run(&solver, initial, &params, &potential, |s, d| {
        diag.write(d)?;
        if sc.snapshots {
            let f = File::create(snap_dir.join(format!("snap_{index:05}.bin")))?;
            io::write_snapshot(BufWriter::new(f), s, header.clone())?;
        }
        index += 1;
        Ok(())
    })?;
    io::write_snapshot(BufWriter::new(File::create(out.join("final.bin"))?), &report.state, header)?;

    let first = report.diagnostics.first().map(|d| d.shock).unwrap_or(f64::NAN);
    let last = report.diagnostics.last().map(|d| d.shock).unwrap_or(f64::NAN);
    let max_l2 = report.diagnostics.iter().map(|d| d.l2).fold(0.0, f64::max);
    let summary = json!({
        "config": cfg,
        "preset": preset.map(|p| p.name()),
        "params": params,
        "solver": solver,
        "initial": wave_info,
        "status": report.status,
        "final_time": report.state.time,
        "steps": report.steps,
        "snapshots": index,
        "shock_initial": first,
        "shock_final": last,
        "shock_ratio": last / first,
        "shock_time": report.shock_time,
        "winding_lost": report.winding_lost,
        "max_l2": max_l2,
    });
    io::write_json(&out.join("run.json"), &summary)?;
    match report.status {
        RunStatus::Completed => Ok(()),
        RunStatus::BlowUp { time, detail } => Err(Error::BlowUp { time, detail }.into()),
    }
}

#[derive(Debug, Serialize)]
struct ClassRow {
    class: WaveClass,
    exists: bool,
    lo: Option<f64>,
    hi: Option<f64>,
    critical: Option<f64>,
    reason: Option<String>,
}

#[derive(Debug, Serialize)]
struct StripScanRow {
    b: f64,
    z: f64,
    saturation: f64,
    ell_star: Option<f64>,
    classes: Vec<ClassRow>,
}

#[derive(Debug, Serialize)]
struct AnnulusScanRow {
    b: f64,
    m: f64,
    exists: bool,
    ell_star: Option<f64>,
    reason: Option<String>,
}

fn reason(e: &Error) -> String {
    match e {
        Error::NoSolution { reason, .. } => reason.code().to_string(),
        e => e.to_string(),
    }
}

fn scan_strip(base: &Params, potential: Potential, tol: Tolerances, b: f64, z: f64) -> Result<StripScanRow, CliError> {
    let params = Params { b, b_prime: b, ..*base };
    let problem = StripProblem::new(params, potential)?.with_tolerances(tol.quad, tol.root);
    let k = problem.constants()?;
    let classes = WaveClass::ALL
        .iter()
        .map(|&class| match problem.class_range(class, z, &k) {
            Ok(r) => ClassRow { class, exists: true, lo: Some(r.lo), hi: Some(r.hi), critical: r.critical, reason: None },
            Err(e) => ClassRow { class, exists: false, lo: None, hi: None, critical: None, reason: Some(reason(&e)) },
        })
        .collect();
    Ok(StripScanRow { b, z, saturation: problem.saturation(z)?, ell_star: problem.ell_star(z).ok(), classes })
}

fn scan_annulus(base: &Params, potential: Potential, b: f64, m: f64) -> Result<AnnulusScanRow, CliError> {
    let params = Params { b, b_prime: b, ..*base };
    let problem = AnnulusProblem::new(params, potential)?;
    Ok(match problem.ell_star(m) {
        Ok(s) => AnnulusScanRow { b, m, exists: true, ell_star: Some(s), reason: None },
        Err(e @ Error::NoSolution { .. }) => AnnulusScanRow { b, m, exists: false, ell_star: None, reason: Some(reason(&e)) },
        Err(e) => return Err(e.into()),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn scan(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let sc = cfg.scan.clone().ok_or_else(|| CliError::Config("scan needs a [scan] section".into()))?;
    let base = cfg.params()?;
    let bs = sc.b.clone().unwrap_or_else(|| vec![base.b]);
    let mut grid: Vec<(f64, f64)> = bs.iter().flat_map(|&b| sc.z.iter().map(move |&z| (b, z))).collect();
    grid.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    grid.dedup();
    let tol = cfg.tolerances;
    let mut w = csv::Writer::from_path(out.join("scan.csv")).map_err(|e| CliError::Core(Error::Format(e.to_string())))?;
    let csv_err = |e: csv::Error| CliError::Core(Error::Format(e.to_string()));
    let report = match sc.kind {
        ScanKind::Strip => {
            let potential = cfg.strip_potential();
            let rows: Vec<StripScanRow> =
                grid.par_iter().map(|&(b, z)| scan_strip(&base, potential, tol, b, z)).collect::<Result<_, _>>()?;
            w.write_record(["b", "z", "class", "exists", "lo", "hi", "critical", "reason"]).map_err(csv_err)?;
            for r in &rows {
                for c in &r.classes {
                    w.write_record([
                        format!("{:e}", r.b),
                        format!("{:e}", r.z),
                        c.class.name().to_string(),
                        c.exists.to_string(),
                        opt(c.lo),
                        opt(c.hi),
                        opt(c.critical),
                        c.reason.clone().unwrap_or_default(),
                    ])
                    .map_err(csv_err)?;
                }
            }
            json!({ "kind": sc.kind, "config": cfg, "rows": rows })
        }
        ScanKind::Annulus => {
            let potential = cfg.annulus_potential();
            let rows: Vec<AnnulusScanRow> =
                grid.par_iter().map(|&(b, m)| scan_annulus(&base, potential, b, m)).collect::<Result<_, _>>()?;
            w.write_record(["b", "m", "exists", "ell_star", "reason"]).map_err(csv_err)?;
            for r in &rows {
                w.write_record([
                    format!("{:e}", r.b),
                    format!("{:e}", r.m),
                    r.exists.to_string(),
                    opt(r.ell_star),
                    r.reason.clone().unwrap_or_default(),
                ])
                .map_err(csv_err)?;
            }
            json!({ "kind": sc.kind, "config": cfg, "rows": rows })
        }
    };
    w.flush()?;
    io::write_json(&out.join("scan.json"), &report)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    value: f64,
    tolerance: f64,
}

impl Check {
    fn at_most(name: &'static str, value: f64, tolerance: f64) -> Self {
        Check { name, passed: value <= tolerance, value, tolerance }
    }
}

fn field<T: serde::de::DeserializeOwned>(meta: &Value, key: &str) -> Result<T, CliError> {
    serde_json::from_value(meta.get(key).cloned().unwrap_or(Value::Null))
        .map_err(|e| CliError::Core(Error::Format(format!("metadata `{key}`: {e}"))))
}

/// Largest |c1 u + b rho beta'| and |u|^2 - 1 over the samples.
fn pointwise(params: &Params, rho: &[f64], ua: &[f64], ub: &[f64], dbeta: &[f64]) -> (f64, f64) {
    let mut flux = 0.0f64;
    let mut norm = 0.0f64;
    for i in 0..rho.len() {
        let f = (params.c1 * ua[i] + params.b * rho[i] * dbeta[i]) / params.c1;
        flux = flux.max(if f.is_nan() { f64::INFINITY } else { f.abs() });
        norm = norm.max((ua[i] * ua[i] + ub[i] * ub[i] - 1.0).abs());
    }
    (flux, norm)
}

fn check_strip(p: &StripProfile, meta: &Value, tol: &Tolerances) -> Result<Vec<Check>, CliError> {
    let params: Params = field(meta, "params")?;
    let potential: Potential = field(meta, "potential")?;
    let spec: StripWaveSpec = field(meta, "spec")?;
    let lambda: f64 = field(meta, "lambda")?;
    let mass: f64 = field(meta, "mass")?;
    let critical: bool = field(meta, "critical")?;
    let samples: usize = field(meta, "samples")?;
    if p.len() + 1 != samples {
        return Err(CliError::Core(Error::Format(format!("{} rows for {samples} samples", p.len()))));
    }
    let res = residual_strip(p, &params, &potential, spec.z, lambda, tol.strip_window)?;
    let scale = (512.0 / samples as f64).powi(2);
    let (flux, norm) = pointwise(&params, &p.rho, &p.u1, &p.u2, &p.dbeta);
    let mut checks = vec![
        Check::at_most("residual", res.max, tol.residual * scale),
        Check::at_most("unit-velocity", norm, 1e-12),
        Check::at_most("zero-flux", flux, 1e-8),
        Check::at_most("mass", (mass - 1.0).abs(), 1e-8),
        Check::at_most("positive-density", if p.rho.iter().all(|&r| r > 0.0) { 0.0 } else { 1.0 }, 0.0),
    ];
    if !matches!(spec.class, WaveClass::NegDInc | WaveClass::NegDDec) {
        let r = reflection_norms(p, tol.strip_window);
        if critical {
            checks.push(Check::at_most("u1-odd", r.u1_odd, 1e-8));
            checks.push(Check::at_most("beta-even", r.beta_even, 1e-8));
        } else {
            checks.push(Check::at_most("u1-even", r.u1_even, 1e-8));
        }
    }
    Ok(checks)
}

fn check_annulus(p: &swarmwave::annulus::AnnulusProfile, meta: &Value, tol: &Tolerances) -> Result<Vec<Check>, CliError> {
    let params: Params = field(meta, "params")?;
    let potential: Potential = field(meta, "potential")?;
    let spec: AnnulusWaveSpec = field(meta, "spec")?;
    let lambda: f64 = field(meta, "lambda")?;
    let mass: f64 = field(meta, "mass")?;
    let samples: usize = field(meta, "samples")?;
    let res = residual_annulus(p, &params, &potential, spec.m, lambda, tol.annulus_window)?;
    let scale = (512.0 / samples as f64).powi(2);
    let (flux, norm) = pointwise(&params, &p.rho, &p.u_r, &p.u_theta, &p.dbeta);
    Ok(vec![
        Check::at_most("residual", res.max, tol.residual * scale),
        Check::at_most("unit-velocity", norm, 1e-12),
        Check::at_most("zero-flux", flux, 1e-8),
        Check::at_most("mass", (mass - 1.0).abs(), 1e-6),
        Check::at_most("positive-density", if p.rho.iter().all(|&r| r > 0.0) { 0.0 } else { 1.0 }, 0.0),
    ])
}

pub fn check(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let tol = cfg.tolerances;
    let path = cfg.check.as_ref().and_then(|c| c.profile.clone());
    let (source, kind, checks) = match &path {
        Some(path) => {
            let (table, meta) = io::read_profile(path)?;
            let kind: String = field(&meta, "kind")?;
            let checks = match kind.as_str() {
                "strip" => check_strip(&table.to_strip()?, &meta, &tol)?,
                "annulus" => check_annulus(&table.to_annulus()?, &meta, &tol)?,
                k => return Err(CliError::Core(Error::Format(format!("unknown profile kind `{k}`")))),
            };
            (json!(path), kind, checks)
        }
        None => {
            if let Some(sc) = &cfg.strip {
                let (problem, wave, star) = build_strip(cfg, sc)?;
                let meta = strip_metadata(cfg, &problem, &wave, star, sc.samples)?;
                (json!("built"), "strip".to_string(), check_strip(&wave.profile, &meta, &tol)?)
            } else if let Some(ac) = &cfg.annulus {
                let (problem, wave) = build_annulus(cfg, ac)?;
                let meta = annulus_metadata(cfg, &problem, &wave, ac.samples)?;
                (json!("built"), "annulus".to_string(), check_annulus(&wave.profile, &meta, &tol)?)
            } else {
                return Err(CliError::Config("check needs [check] profile or a [strip] / [annulus] section".into()));
            }
        }
    };
    let passed = checks.iter().all(|c| c.passed);
    let report = json!({ "source": source, "kind": kind, "passed": passed, "checks": checks });
    io::write_json(&out.join("check.json"), &report)?;
    println!("{report}");
    if passed {
        Ok(())
    } else {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        Err(CliError::Failed(format!("failed checks: {}", failed.join(", "))))
    }
}
