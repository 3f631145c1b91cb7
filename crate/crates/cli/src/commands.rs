use std::path::Path;

use otto_core::cycle::{grid_scan, run_cycle, MediumResult, ScanConfig};
use otto_core::strokes::{ghd_stroke, thermal_stroke_with_snapshots, work_along, GhdOptions, StrokePath};
use otto_core::{DiscreteModel, FillingState, ThermalPoint};
use serde::Serialize;

use crate::config::{RunConfig, ScanAxis, StateSection, StrokeKindName};
use crate::output::{num, opt, Writer};
use crate::CliError;

fn state_section(cfg: &RunConfig) -> Result<&StateSection, CliError> {
    cfg.state
        .as_ref()
        .ok_or_else(|| CliError::Config("a [state] table is required".into()))
}

fn solve_state(dm: &DiscreteModel, s: &StateSection) -> Result<ThermalPoint, CliError> {
    if !dm.model().is_interacting() {
        return Ok(dm.thermal_point(s.beta, 0.0, None)?);
    }
    match (s.magnetization, s.mu) {
        (Some(m), None) => Ok(dm.thermal_state(s.beta, m)?),
        (None, Some(mu)) => Ok(dm.thermal_point(s.beta, mu, None)?),
        _ => Err(CliError::Config(
            "[state] needs magnetization or mu for this chain".into(),
        )),
    }
}

#[derive(Serialize)]
struct StateReport<'a> {
    chi: f64,
    beta: f64,
    mu: Option<f64>,
    energy: f64,
    entropy: f64,
    magnetization: Option<f64>,
    /// `−ln Z / L`.
    minus_log_partition: f64,
    particle_numbers: Vec<f64>,
    filling: &'a FillingState,
}

pub fn thermal_state(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<String>, CliError> {
    let s = state_section(cfg)?;
    let dm = DiscreteModel::new(cfg.model.build()?, cfg.numerics.numerics())?;
    let p = solve_state(&dm, s)?;
    let report = StateReport {
        chi: p.chi,
        beta: p.beta,
        mu: p.magnetization.map(|_| p.mu),
        energy: p.energy,
        entropy: p.entropy,
        magnetization: p.magnetization,
        minus_log_partition: dm.free_energy(&p.epsilon),
        particle_numbers: p.density.particle_numbers(),
        filling: &p.filling,
    };
    let mut w = Writer::new(out_dir, cfg)?;
    w.json("thermal_state.json", &report)?;
    let mid = dm.grid().midpoints();
    let mut rows = Vec::new();
    for a in 0..dm.n_strings() {
        for (j, &lam) in mid.iter().enumerate() {
            rows.push(vec![
                (a + 1).to_string(),
                num(lam),
                num(p.epsilon.get(a, j)),
                num(p.filling.values().get(a, j)),
                num(p.density.rho.get(a, j)),
                num(p.density.rho_total.get(a, j)),
            ]);
        }
    }
    w.csv(
        "thermal_state.csv",
        &["string", "lambda", "epsilon", "filling", "rho", "rho_total"],
        &rows,
    )?;
    let mut lines = vec![format!("energy = {}, entropy = {}", report.energy, report.entropy)];
    if let Some(m) = report.magnetization {
        lines.push(format!("magnetization = {m}, mu = {}", p.mu));
    }
    lines.extend(w.written().iter().map(|p| format!("wrote {}", p.display())));
    Ok(lines)
}

#[derive(Serialize)]
struct StrokeReport {
    kind: StrokeKindName,
    path: StrokePath,
    work: f64,
    work_integral: f64,
    entropy_change: f64,
    entropy_defect: f64,
    clamp_events: usize,
}

#[derive(Serialize)]
struct Snapshot<'a> {
    step: usize,
    chi: f64,
    filling: &'a FillingState,
}

pub fn stroke(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<String>, CliError> {
    let s = state_section(cfg)?;
    let st = cfg
        .stroke
        .as_ref()
        .ok_or_else(|| CliError::Config("a [stroke] table is required".into()))?;
    let model = cfg.model.build()?;
    let chi_start = model.control();
    let steps = if chi_start == st.chi_end { 0 } else { cfg.numerics.steps };
    let path = StrokePath::new(chi_start, st.chi_end, steps)?;
    model.check_path(chi_start, st.chi_end)?;
    let dm = DiscreteModel::new(model, cfg.numerics.numerics())?;
    let start = solve_state(&dm, s)?;
    let traj = match st.kind {
        StrokeKindName::Thermal => thermal_stroke_with_snapshots(&dm, &start, &path, st.snapshot_every)?,
        StrokeKindName::Prethermal => ghd_stroke(
            &dm,
            &start.filling,
            &path,
            &GhdOptions {
                bootstrap_substeps: cfg.numerics.bootstrap_substeps,
                snapshot_every: st.snapshot_every,
            },
        )?,
    };
    let s0 = traj.records[0].entropy;
    let rows: Vec<Vec<String>> = traj
        .records
        .iter()
        .map(|r| {
            vec![
                r.step.to_string(),
                num(r.chi),
                num(r.energy),
                num(r.entropy),
                opt(r.magnetization),
                num(r.work),
                num(r.entropy - s0),
                num(r.dchi_energy),
                opt(r.beta),
                opt(r.mu),
            ]
        })
        .collect();
    let report = StrokeReport {
        kind: st.kind,
        path,
        work: work_along(&traj),
        work_integral: traj.work_integral(),
        entropy_change: traj.entropy_change(),
        entropy_defect: traj.entropy_defect(),
        clamp_events: traj.clamp_events,
    };
    let mut w = Writer::new(out_dir, cfg)?;
    w.csv(
        "stroke.csv",
        &[
            "step", "chi", "u", "s", "m", "w_acc", "s_defect", "dchi_u", "beta", "mu",
        ],
        &rows,
    )?;
    w.json("stroke.json", &report)?;
    if st.snapshot_every > 0 {
        let snaps: Vec<Snapshot> = traj
            .snapshots
            .iter()
            .map(|(step, chi, filling)| Snapshot {
                step: *step,
                chi: *chi,
                filling,
            })
            .collect();
        w.json("stroke_snapshots.json", &snaps)?;
    }
    let mut lines = vec![format!(
        "work = {}, entropy change = {:e}, clamp events = {}",
        report.work, report.entropy_change, report.clamp_events
    )];
    lines.extend(w.written().iter().map(|p| format!("wrote {}", p.display())));
    Ok(lines)
}

fn medium_rows(name: &str, m: &MediumResult, rows: &mut Vec<Vec<String>>, dist: &mut Vec<Vec<String>>) {
    for (i, s) in m.strokes.iter().enumerate() {
        for r in &s.records {
            rows.push(vec![
                name.to_string(),
                (i + 1).to_string(),
                r.step.to_string(),
                num(r.chi),
                num(r.energy),
                num(r.entropy),
                opt(r.magnetization),
                num(r.work),
            ]);
        }
        for d in &s.distances {
            dist.push(vec![
                (i + 1).to_string(),
                d.step.to_string(),
                num(d.chi),
                num(d.distance),
                num(d.reference_beta),
            ]);
        }
    }
}

fn describe(name: &str, m: &MediumResult) -> String {
    match m.efficiency {
        Some(eta) => format!("{name}: W = {}, Q_abs = {}, efficiency = {eta}", m.work, m.q_abs),
        None => format!("{name}: W = {}, Q_abs = {}, not an engine", m.work, m.q_abs),
    }
}

pub fn cycle(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<String>, CliError> {
    let c = cfg
        .cycle
        .as_ref()
        .ok_or_else(|| CliError::Config("a [cycle] table is required".into()))?;
    let result = run_cycle(&cfg.cycle_config(c)?)?;
    let mut rows = Vec::new();
    let mut dist = Vec::new();
    let mut lines = Vec::new();
    if let Some(m) = &result.thermal {
        medium_rows("thermal", m, &mut rows, &mut dist);
        lines.push(describe("thermal", m));
    }
    if let Some(m) = &result.prethermal {
        medium_rows("prethermal", m, &mut rows, &mut dist);
        lines.push(describe("prethermal", m));
    }
    let mut w = Writer::new(out_dir, cfg)?;
    w.json("cycle.json", &result)?;
    w.csv(
        "cycle_energy.csv",
        &["medium", "stroke", "step", "chi", "u", "s", "m", "w_acc"],
        &rows,
    )?;
    if !dist.is_empty() {
        w.csv(
            "cycle_distance.csv",
            &["stroke", "step", "chi", "distance", "reference_beta"],
            &dist,
        )?;
    }
    lines.extend(w.written().iter().map(|p| format!("wrote {}", p.display())));
    Ok(lines)
}

pub fn scan(cfg: &RunConfig, out_dir: &Path, workers: usize) -> Result<Vec<String>, CliError> {
    let s = cfg
        .scan
        .as_ref()
        .ok_or_else(|| CliError::Config("a [scan] table is required".into()))?;
    let rows = s.rows.values();
    let betas: Vec<f64> = match s.axis {
        ScanAxis::Beta => rows,
        ScanAxis::Temperature => rows.iter().map(|t| 1.0 / t).collect(),
    };
    let config = ScanConfig {
        model: cfg.model.build()?,
        betas,
        chis: s.chi.values(),
        magnetization: s.magnetization,
        numerics: cfg.numerics.numerics(),
        dchi: s.dchi,
        dbeta: s.dbeta,
    };
    let report = grid_scan(&config, workers)?;
    let mut failed = 0;
    let mut violations = 0;
    let table: Vec<Vec<String>> = report
        .points
        .iter()
        .map(|p| {
            let flag = match (&p.error, &p.efficiency) {
                (Some(_), _) => {
                    failed += 1;
                    "failed"
                }
                (None, Some(e)) if e.vanishing_thermal_efficiency => "vanishing_eta_th",
                _ => "ok",
            };
            if p.sign_ok() == Some(false) {
                violations += 1;
            }
            let e = p.efficiency.as_ref();
            vec![
                num(p.beta),
                num(1.0 / p.beta),
                num(p.chi),
                opt(e.map(|e| e.eta_thermal_scaled)),
                opt(e.and_then(|e| e.ratio_scaled)),
                opt(e.map(|e| e.eta_thermal)),
                opt(e.and_then(|e| e.ratio)),
                opt(p.work_gap),
                opt(p.mu),
                flag.to_string(),
            ]
        })
        .collect();
    let mut w = Writer::new(out_dir, cfg)?;
    w.csv(
        "scan.csv",
        &[
            "beta",
            "temperature",
            "chi",
            "eta_th_scaled",
            "ratio_scaled",
            "eta_th",
            "ratio",
            "work_gap",
            "mu",
            "flag",
        ],
        &table,
    )?;
    w.json("scan.json", &report)?;
    for p in report.points.iter().filter(|p| p.error.is_some()) {
        eprintln!(
            "point beta = {}, chi = {} failed: {}",
            p.beta,
            p.chi,
            p.error.as_deref().unwrap_or_default()
        );
    }
    let mut lines = vec![format!(
        "{} points, {failed} failed, {violations} sign violations",
        report.points.len()
    )];
    lines.extend(w.written().iter().map(|p| format!("wrote {}", p.display())));
    Ok(lines)
}
