//! Adiabatic strokes: the thermal flow of the Lagrange multipliers and the
//! prethermal flow of the filling under generalized hydrodynamics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::correlators::{solve_small, CorrelatorBundle};
use crate::error::{Error, Result};
use crate::models::ChargeId;
use crate::state::{quartic_periodic, Field, FillingState, RootDensityState, CLAMP_TOLERANCE};
use crate::tba::{DiscreteModel, ThermalPoint};

/// Default number of steps per stroke.
pub const DEFAULT_STEPS: usize = 400;
/// Default number of first-order sub-steps used to start the staggered
/// prethermal scheme.
pub const DEFAULT_BOOTSTRAP_SUBSTEPS: usize = 100;

/// A uniform schedule of control values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrokePath {
    pub chi_start: f64,
    pub chi_end: f64,
    pub n_steps: usize,
}

impl StrokePath {
    pub fn new(chi_start: f64, chi_end: f64, n_steps: usize) -> Result<Self> {
        if !(chi_start.is_finite() && chi_end.is_finite()) {
            return Err(Error::invalid("stroke endpoints must be finite"));
        }
        if chi_start == chi_end {
            return Ok(Self {
                chi_start,
                chi_end,
                n_steps: 0,
            });
        }
        if n_steps == 0 {
            return Err(Error::invalid("a stroke of nonzero length needs at least one step"));
        }
        Ok(Self {
            chi_start,
            chi_end,
            n_steps,
        })
    }

    pub fn step(&self) -> f64 {
        if self.n_steps == 0 {
            0.0
        } else {
            (self.chi_end - self.chi_start) / self.n_steps as f64
        }
    }

    /// Control value after `k` steps; the last one equals `chi_end` exactly.
    pub fn chi(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.chi_end
        } else {
            self.chi_start + (self.chi_end - self.chi_start) * k as f64 / self.n_steps as f64
        }
    }

    pub fn schedule(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.chi(k)).collect()
    }

    pub fn reversed(&self) -> Self {
        Self {
            chi_start: self.chi_end,
            chi_end: self.chi_start,
            n_steps: self.n_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrokeKind {
    Thermal,
    Prethermal,
}

/// Observables recorded after each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeRecord {
    pub step: usize,
    pub chi: f64,
    pub energy: f64,
    pub entropy: f64,
    pub magnetization: Option<f64>,
    /// `⟨∂_χ H⟩ / L`.
    pub dchi_energy: f64,
    /// Work extracted so far, `u_start − u`.
    pub work: f64,
    /// Multipliers, for thermal strokes.
    pub beta: Option<f64>,
    pub mu: Option<f64>,
    /// Per-string particle numbers `∫ρ_a`.
    pub particles: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrokeTrajectory {
    pub kind: StrokeKind,
    pub path: StrokePath,
    pub records: Vec<StrokeRecord>,
    pub end_filling: FillingState,
    pub end_density: RootDensityState,
    /// Final thermal state, for thermal strokes.
    pub end_point: Option<ThermalPoint>,
    /// Interpolations whose raw value left `[0, 1]` beyond the tolerance.
    pub clamp_events: usize,
    /// Fillings stored every `snapshot_every` steps, with their control value.
    pub snapshots: Vec<(usize, f64, FillingState)>,
}

impl StrokeTrajectory {
    /// Largest entropy deviation from the first record.
    pub fn entropy_defect(&self) -> f64 {
        let s0 = self.records[0].entropy;
        self.records.iter().map(|r| (r.entropy - s0).abs()).fold(0.0, f64::max)
    }

    /// Final minus initial entropy.
    pub fn entropy_change(&self) -> f64 {
        self.records[self.records.len() - 1].entropy - self.records[0].entropy
    }

    pub fn start_energy(&self) -> f64 {
        self.records[0].energy
    }

    pub fn end_energy(&self) -> f64 {
        self.records[self.records.len() - 1].energy
    }

    /// Trapezoidal integral of `−⟨∂_χ H⟩` along the recorded schedule.
    pub fn work_integral(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| -0.5 * (w[1].chi - w[0].chi) * (w[0].dchi_energy + w[1].dchi_energy))
            .sum()
    }
}

/// Work density extracted along a stroke, `u_start − u_end`.
pub fn work_along(trajectory: &StrokeTrajectory) -> f64 {
    trajectory.start_energy() - trajectory.end_energy()
}

fn wrap_step(step: usize, chi: f64) -> impl FnOnce(Error) -> Error {
    move |e| Error::StrokeFailure {
        step,
        chi,
        source: Box::new(e),
    }
}

fn record(
    dm: &DiscreteModel,
    step: usize,
    filling: &FillingState,
    density: &RootDensityState,
    dchi_energy: f64,
    u0: f64,
    multipliers: Option<(f64, f64)>,
) -> StrokeRecord {
    let energy = dm.charge_expectation(density, ChargeId::Energy);
    StrokeRecord {
        step,
        chi: dm.control(),
        energy,
        entropy: dm.yang_yang_entropy(filling, density),
        magnetization: dm.magnetization(density),
        dchi_energy,
        work: u0 - energy,
        beta: multipliers.map(|m| m.0),
        mu: multipliers.and_then(|m| dm.model().is_interacting().then_some(m.1)),
        particles: density.particle_numbers(),
    }
}

/// Right-hand side of the thermal flow, `C ∂_χ(β, μ) = −β a`.
fn thermal_rate(dm: &DiscreteModel, point: &ThermalPoint) -> Result<(Vec<f64>, f64)> {
    let bundle = CorrelatorBundle::new(dm, &point.filling)?;
    let c = bundle.thermal_covariance()?;
    let a = bundle.thermal_response()?;
    let rhs: Vec<f64> = a.iter().map(|x| -point.beta * x).collect();
    let rate = solve_small(&c, &rhs)?;
    Ok((rate, bundle.dcharge_expectation(ChargeId::Energy)?))
}

fn solve_multipliers(dm: &DiscreteModel, y: &[f64], guess: &Field) -> Result<ThermalPoint> {
    let mu = y.get(1).copied().unwrap_or(0.0);
    dm.thermal_point(y[0], mu, Some(guess))
}

/// Thermal adiabat: integrate the flow of `(β, μ)` with the classical
/// fourth-order Runge–Kutta method, re-solving the thermal state at every
/// stage.
pub fn thermal_stroke(dm: &DiscreteModel, start: &ThermalPoint, path: &StrokePath) -> Result<StrokeTrajectory> {
    thermal_stroke_with_snapshots(dm, start, path, 0)
}

/// As [`thermal_stroke`], storing the filling every `snapshot_every` steps.
pub fn thermal_stroke_with_snapshots(
    dm: &DiscreteModel,
    start: &ThermalPoint,
    path: &StrokePath,
    snapshot_every: usize,
) -> Result<StrokeTrajectory> {
    if (start.chi - path.chi_start).abs() > 1e-12 * (1.0 + start.chi.abs()) {
        return Err(Error::invalid(format!(
            "start state lives at chi = {}, path starts at {}",
            start.chi, path.chi_start
        )));
    }
    dm.model().check_path(path.chi_start, path.chi_end)?;
    let interacting = dm.model().is_interacting();
    let dm0 = dm.at_control(path.chi_start)?;
    let mut y = if interacting {
        vec![start.beta, start.mu]
    } else {
        vec![start.beta]
    };
    let mut point = start.clone();
    let (mut rate, mut dh) = thermal_rate(&dm0, &point).map_err(wrap_step(0, path.chi_start))?;
    let u0 = start.energy;
    let mut records = vec![record(
        &dm0,
        0,
        &point.filling,
        &point.density,
        dh,
        u0,
        Some((y[0], point.mu)),
    )];
    let mut snapshots = Vec::new();
    if snapshot_every > 0 {
        snapshots.push((0, path.chi_start, point.filling.clone()));
    }
    let h = path.step();
    for k in 0..path.n_steps {
        let chi = path.chi(k);
        let chi_half = chi + 0.5 * h;
        let chi_next = path.chi(k + 1);
        let fail = |e| wrap_step(k + 1, chi_next)(e);
        let dm_half = dm.at_control(chi_half).map_err(fail)?;
        let dm_next = dm.at_control(chi_next).map_err(fail)?;
        let stage = |dmx: &DiscreteModel, yx: &[f64]| -> Result<Vec<f64>> {
            let p = solve_multipliers(dmx, yx, &point.epsilon)?;
            Ok(thermal_rate(dmx, &p)?.0)
        };
        let k1 = rate.clone();
        let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
        let k2 = stage(&dm_half, &y2).map_err(fail)?;
        let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
        let k3 = stage(&dm_half, &y3).map_err(fail)?;
        let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
        let k4 = stage(&dm_next, &y4).map_err(fail)?;
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        point = solve_multipliers(&dm_next, &y, &point.epsilon).map_err(fail)?;
        (rate, dh) = thermal_rate(&dm_next, &point).map_err(fail)?;
        records.push(record(
            &dm_next,
            k + 1,
            &point.filling,
            &point.density,
            dh,
            u0,
            Some((y[0], point.mu)),
        ));
        if snapshot_every > 0 && ((k + 1) % snapshot_every == 0 || k + 1 == path.n_steps) {
            snapshots.push((k + 1, chi_next, point.filling.clone()));
        }
    }
    Ok(StrokeTrajectory {
        kind: StrokeKind::Thermal,
        path: *path,
        records,
        end_filling: point.filling.clone(),
        end_density: point.density.clone(),
        end_point: Some(point),
        clamp_events: 0,
        snapshots,
    })
}

/// Options of the prethermal stroke.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhdOptions {
    pub bootstrap_substeps: usize,
    /// Store the filling every this many steps (0 disables snapshots).
    pub snapshot_every: usize,
}

impl Default for GhdOptions {
    fn default() -> Self {
        Self {
            bootstrap_substeps: DEFAULT_BOOTSTRAP_SUBSTEPS,
            snapshot_every: 0,
        }
    }
}

/// Force and dressed quantities of a filling at one control value.
struct Drift {
    force: Field,
    density: RootDensityState,
    dchi_energy: f64,
}

fn drift(dm: &DiscreteModel, filling: &FillingState) -> Result<Drift> {
    let th = filling.values();
    let n_cells = th.n_cells();
    if !dm.model().is_interacting() {
        let density = dm.root_density(filling)?;
        let dchi = dm.dchi_charge(ChargeId::Energy);
        let dchi_energy = dm.grid().integrate(
            &dchi
                .as_slice()
                .iter()
                .zip(density.rho.as_slice())
                .map(|(a, b)| a * b)
                .collect::<Vec<_>>(),
        );
        return Ok(Drift {
            force: Field::zeros(th.n_strings(), n_cells),
            density,
            dchi_energy,
        });
    }
    let dpdr = dm.dress(th, dm.dlambda_momentum())?;
    let tg = th.zip_map(&dpdr, |t, d| t * d);
    let f = dm.dchi_kernel().apply(&tg).zip_map(dm.dchi_momentum(), |c, d| c - d);
    let fdr = dm.dress(th, &f)?;
    let mid = dm.grid().midpoints();
    let mut force = Field::zeros(th.n_strings(), n_cells);
    for a in 0..th.n_strings() {
        for j in 0..n_cells {
            let d = dpdr.get(a, j);
            if d.abs() < 1e-300 || !d.is_finite() {
                return Err(Error::SingularForce {
                    string: a + 1,
                    lambda: mid[j],
                });
            }
            force.string_mut(a)[j] = fdr.get(a, j) / d;
        }
    }
    let rho_total = dpdr.map(|x| x / (2.0 * PI));
    let rho = th.zip_map(&rho_total, |t, r| t * r);
    let density = RootDensityState {
        grid: dm.grid().clone(),
        strings: dm.model().strings(),
        rho,
        rho_total,
    };
    let dchi = dm.dchi_charge(ChargeId::Energy);
    let dlam = dm.dlambda_charge(ChargeId::Energy);
    let mut dchi_energy = 0.0;
    let w = dm.grid().widths();
    for k in 0..th.len() {
        dchi_energy += w[k % n_cells]
            * (dchi.as_slice()[k] * density.rho.as_slice()[k]
                + dlam.as_slice()[k] * fdr.as_slice()[k] * th.as_slice()[k] / (2.0 * PI));
    }
    Ok(Drift {
        force,
        density,
        dchi_energy,
    })
}

/// Transport `filling` along characteristics over a control step `dchi`
/// with the force field `force`. With `implicit`, the foot of each
/// characteristic solves `x = λ − dχ F((λ + x)/2)`; otherwise `x = λ − dχ F(λ)`.
fn advect(
    filling: &FillingState,
    force: &Field,
    dchi: f64,
    implicit: bool,
    clamps: &mut usize,
) -> Result<FillingState> {
    let grid = filling.grid();
    let th = filling.values();
    let mid = grid.midpoints();
    let mut out = Field::zeros(th.n_strings(), th.n_cells());
    for a in 0..th.n_strings() {
        let fa = force.string(a);
        let ta = th.string(a);
        for (j, &lam) in mid.iter().enumerate() {
            let mut x = lam - dchi * fa[j];
            if implicit && fa[j] != 0.0 {
                for _ in 0..20 {
                    let next = lam - dchi * quartic_periodic(fa, grid, 0.5 * (lam + x));
                    let change = (next - x).abs();
                    x = next;
                    if change < 1e-15 * (1.0 + lam.abs()) {
                        break;
                    }
                }
            }
            if !x.is_finite() {
                return Err(Error::invalid(format!(
                    "characteristic of string {} left the zone",
                    a + 1
                )));
            }
            let raw = quartic_periodic(ta, grid, x);
            if !(-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&raw) {
                *clamps += 1;
            }
            out.string_mut(a)[j] = raw.clamp(0.0, 1.0);
        }
    }
    FillingState::new(grid.clone(), filling.strings(), out)
}

/// Prethermal adiabat: evolve the filling with `∂_χϑ + F ∂_λϑ = 0` by a
/// staggered second-order method of characteristics.
///
/// Fillings at integer steps are advanced with the force evaluated from the
/// half-step fillings and vice versa. The first half-step filling comes from
/// first-order sub-stepping.
pub fn ghd_stroke(
    dm: &DiscreteModel,
    start: &FillingState,
    path: &StrokePath,
    opts: &GhdOptions,
) -> Result<StrokeTrajectory> {
    if start.grid() != dm.grid() || start.strings() != dm.model().strings() {
        return Err(Error::invalid("start filling does not match the model grid"));
    }
    dm.model().check_path(path.chi_start, path.chi_end)?;
    let dm0 = dm.at_control(path.chi_start)?;
    let d0 = drift(&dm0, start).map_err(wrap_step(0, path.chi_start))?;
    let u0 = dm0.charge_expectation(&d0.density, ChargeId::Energy);
    let mut records = vec![record(&dm0, 0, start, &d0.density, d0.dchi_energy, u0, None)];
    let mut snapshots = Vec::new();
    if opts.snapshot_every > 0 {
        snapshots.push((0, path.chi_start, start.clone()));
    }
    let mut clamps = 0;
    let h = path.step();
    let mut current = start.clone();
    let mut density = d0.density;
    if path.n_steps > 0 {
        // First-order start of the half-step filling.
        let subs = opts.bootstrap_substeps.max(1);
        let hs = 0.5 * h / subs as f64;
        let mut half = start.clone();
        let mut force = d0.force.clone();
        for s in 0..subs {
            if s > 0 {
                let dms = dm
                    .at_control(path.chi_start + s as f64 * hs)
                    .map_err(wrap_step(0, path.chi_start))?;
                force = drift(&dms, &half).map_err(wrap_step(0, path.chi_start))?.force;
            }
            half = advect(&half, &force, hs, false, &mut clamps).map_err(wrap_step(0, path.chi_start))?;
        }
        for k in 0..path.n_steps {
            let chi_next = path.chi(k + 1);
            let fail = |e| wrap_step(k + 1, chi_next)(e);
            let dm_half = dm.at_control(path.chi(k) + 0.5 * h).map_err(fail)?;
            let fh = drift(&dm_half, &half).map_err(fail)?;
            current = advect(&current, &fh.force, h, true, &mut clamps).map_err(fail)?;
            let dm_next = dm.at_control(chi_next).map_err(fail)?;
            let dn = drift(&dm_next, &current).map_err(fail)?;
            if k + 1 < path.n_steps {
                half = advect(&half, &dn.force, h, true, &mut clamps).map_err(fail)?;
            }
            records.push(record(&dm_next, k + 1, &current, &dn.density, dn.dchi_energy, u0, None));
            if opts.snapshot_every > 0 && ((k + 1) % opts.snapshot_every == 0 || k + 1 == path.n_steps) {
                snapshots.push((k + 1, chi_next, current.clone()));
            }
            density = dn.density;
        }
    }
    Ok(StrokeTrajectory {
        kind: StrokeKind::Prethermal,
        path: *path,
        records,
        end_filling: current,
        end_density: density,
        end_point: None,
        clamp_events: clamps,
        snapshots,
    })
}
