//! Otto cycles with thermal and prethermal working media, and the
//! closed-form efficiencies of infinitesimal cycles.

use serde::{Deserialize, Serialize};

use crate::correlators::{solve_small, CorrelatorBundle};
use crate::error::{Error, Result};
use crate::models::{ChargeId, Model};
use crate::state::{gge_distance, Field, FillingState, RootDensityState};
use crate::strokes::{
    ghd_stroke, thermal_stroke, GhdOptions, StrokePath, StrokeRecord, StrokeTrajectory, DEFAULT_BOOTSTRAP_SUBSTEPS,
    DEFAULT_STEPS,
};
use crate::tba::{DiscreteModel, Numerics, ThermalPoint};

/// Which working media a cycle runs with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediumSelector {
    Thermal,
    Prethermal,
    #[default]
    Both,
}

impl MediumSelector {
    pub fn thermal(self) -> bool {
        matches!(self, Self::Thermal | Self::Both)
    }

    pub fn prethermal(self) -> bool {
        matches!(self, Self::Prethermal | Self::Both)
    }
}

/// An Otto cycle: equilibrate with the cold bath at `chi_cold`, drive to
/// `chi_hot`, equilibrate with the hot bath, drive back.
///
/// "Cold" and "hot" are labels for the two baths; either may sit at
/// negative temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleConfig {
    pub model: Model,
    pub chi_cold: f64,
    pub chi_hot: f64,
    pub beta_cold: f64,
    pub beta_hot: f64,
    /// Fixed magnetization of both baths, for chains with a magnon charge.
    pub magnetization: Option<f64>,
    pub numerics: Numerics,
    pub steps: usize,
    pub bootstrap_substeps: usize,
    pub medium: MediumSelector,
    /// Evaluate the distance from equilibrium every this many steps of a
    /// prethermal stroke (0 disables it).
    pub distance_every: usize,
}

impl CycleConfig {
    pub fn new(model: Model, chi: (f64, f64), beta: (f64, f64), magnetization: Option<f64>) -> Self {
        Self {
            model,
            chi_cold: chi.0,
            chi_hot: chi.1,
            beta_cold: beta.0,
            beta_hot: beta.1,
            magnetization,
            numerics: Numerics::default(),
            steps: DEFAULT_STEPS,
            bootstrap_substeps: DEFAULT_BOOTSTRAP_SUBSTEPS,
            medium: MediumSelector::Both,
            distance_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.numerics.validate()?;
        if !(self.chi_cold.is_finite() && self.chi_hot.is_finite()) || self.chi_cold == self.chi_hot {
            return Err(Error::invalid("cycle needs two distinct finite control values"));
        }
        if !(self.beta_cold.is_finite() && self.beta_hot.is_finite()) || self.beta_cold == self.beta_hot {
            return Err(Error::invalid("cycle needs two distinct finite bath temperatures"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("strokes need at least one step"));
        }
        self.model.with_control(self.chi_cold)?;
        self.model.with_control(self.chi_hot)?;
        self.model.check_path(self.chi_cold, self.chi_hot)?;
        if self.model.is_interacting() {
            match self.magnetization {
                Some(m) if m.is_finite() && m > 0.0 && m < 1.0 => {}
                _ => return Err(Error::invalid("fixed magnetization in (0, 1) is required")),
            }
        }
        Ok(())
    }
}

/// Thermal state of a bath at fixed magnetization.
pub fn bath_state(dm: &DiscreteModel, beta: f64, magnetization: Option<f64>) -> Result<ThermalPoint> {
    if dm.model().is_interacting() {
        let m = magnetization.ok_or_else(|| Error::invalid("fixed magnetization is required"))?;
        dm.thermal_state(beta, m)
    } else {
        dm.thermal_point(beta, 0.0, None)
    }
}

/// Equilibrate `incoming` with a bath; returns the bath state and the heat
/// absorbed, `u_out − u_in`.
pub fn isochore(
    dm: &DiscreteModel,
    bath_beta: f64,
    magnetization: Option<f64>,
    incoming: &FillingState,
) -> Result<(ThermalPoint, f64)> {
    let density = dm.root_density(incoming)?;
    let u_in = dm.charge_expectation(&density, ChargeId::Energy);
    let out = bath_state(dm, bath_beta, magnetization)?;
    let q = out.energy - u_in;
    Ok((out, q))
}

/// Thermal state with the same energy (and magnon density, when present)
/// as `density`, found by Newton's method in the multipliers starting from
/// `(beta, mu)`.
pub fn equal_energy_reference(
    dm: &DiscreteModel,
    density: &RootDensityState,
    start: (f64, f64),
    guess: Option<&Field>,
) -> Result<ThermalPoint> {
    let ids = dm.model().thermal_charges();
    let target: Vec<f64> = ids.iter().map(|&id| dm.charge_expectation(density, id)).collect();
    let scale: f64 = target.iter().map(|x| x.abs()).fold(1.0, f64::max);
    let mut y = vec![start.0, start.1];
    let mut point = dm.thermal_point(y[0], y[1], guess)?;
    let residual = |p: &ThermalPoint| -> Vec<f64> {
        ids.iter()
            .zip(&target)
            .map(|(&id, t)| dm.charge_expectation(&p.density, id) - t)
            .collect()
    };
    let norm = |r: &[f64]| r.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut r = residual(&point);
    let max_iter = dm.numerics().max_newton_iterations;
    for _ in 0..max_iter {
        if norm(&r) <= 1e-11 * scale {
            return Ok(point);
        }
        let bundle = CorrelatorBundle::new(dm, &point.filling)?;
        // ∂⟨Q_i⟩/∂β_j = −C_ij, so the Newton step is C⁻¹ r.
        let step = solve_small(&bundle.thermal_covariance()?, &r)?;
        if norm(&step) <= 1e-13 * (1.0 + norm(&y)) {
            return Ok(point);
        }
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = y
                .iter()
                .zip(step.iter().chain(std::iter::repeat(&0.0)))
                .map(|(a, b)| a + t * b)
                .collect();
            let attempt = dm.thermal_point(trial[0], trial[1], Some(&point.epsilon)).map(|p| {
                let rr = residual(&p);
                (p, rr)
            });
            match attempt {
                Ok((p, rr)) if norm(&rr) < norm(&r) || t < 1e-3 => {
                    y = trial;
                    point = p;
                    r = rr;
                    break;
                }
                Err(e) if t < 1e-3 => return Err(e),
                _ => t *= 0.5,
            }
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: max_iter,
        residual: norm(&r),
    })
}

/// Summary of a corner state of the cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerState {
    pub chi: f64,
    pub energy: f64,
    pub entropy: f64,
    pub magnetization: Option<f64>,
    pub beta: Option<f64>,
    pub mu: Option<f64>,
}

impl CornerState {
    fn thermal(p: &ThermalPoint) -> Self {
        Self {
            chi: p.chi,
            energy: p.energy,
            entropy: p.entropy,
            magnetization: p.magnetization,
            beta: Some(p.beta),
            mu: p.magnetization.map(|_| p.mu),
        }
    }

    fn from_record(r: &StrokeRecord) -> Self {
        Self {
            chi: r.chi,
            energy: r.energy,
            entropy: r.entropy,
            magnetization: r.magnetization,
            beta: r.beta,
            mu: r.mu,
        }
    }
}

/// Distance from equilibrium at one point of a prethermal stroke.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistancePoint {
    pub step: usize,
    pub chi: f64,
    pub distance: f64,
    /// Inverse temperature of the equal-energy thermal reference.
    pub reference_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeOutcome {
    pub path: StrokePath,
    pub records: Vec<StrokeRecord>,
    pub clamp_events: usize,
    /// Trapezoidal integral of `−⟨∂_χH⟩`, a cross-check of the work.
    pub work_integral: f64,
    pub distances: Vec<DistancePoint>,
}

impl StrokeOutcome {
    pub fn entropy_change(&self) -> f64 {
        self.records[self.records.len() - 1].entropy - self.records[0].entropy
    }

    pub fn max_distance(&self) -> Option<f64> {
        self.distances.iter().map(|d| d.distance).reduce(f64::max)
    }
}

/// Energy bookkeeping of one working medium. `W` is work extracted on the
/// adiabats, `Q` heat absorbed on the isochores; energy balance reads
/// `W₁ + W₂ = Q₁ + Q₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumResult {
    pub w1: f64,
    pub w2: f64,
    pub q1: f64,
    pub q2: f64,
    pub work: f64,
    pub q_abs: f64,
    /// `W / Q_abs`; `None` when the cycle is not an engine (`W ≤ 0`).
    pub efficiency: Option<f64>,
    pub is_engine: bool,
    /// Start of stroke 1, end of stroke 1, start of stroke 2, end of stroke 2.
    pub corners: [CornerState; 4],
    pub strokes: [StrokeOutcome; 2],
}

impl MediumResult {
    fn assemble(bath_cold: &ThermalPoint, bath_hot: &ThermalPoint, s1: StrokeOutcome, s2: StrokeOutcome) -> Self {
        let b = CornerState::from_record(s1.records.last().expect("nonempty stroke"));
        let d = CornerState::from_record(s2.records.last().expect("nonempty stroke"));
        let w1 = bath_cold.energy - b.energy;
        let q1 = bath_hot.energy - b.energy;
        let w2 = bath_hot.energy - d.energy;
        let q2 = bath_cold.energy - d.energy;
        let work = w1 + w2;
        let q_abs = q1.max(q2);
        let is_engine = work > 0.0;
        Self {
            w1,
            w2,
            q1,
            q2,
            work,
            q_abs,
            efficiency: is_engine.then_some(work / q_abs),
            is_engine,
            corners: [CornerState::thermal(bath_cold), b, CornerState::thermal(bath_hot), d],
            strokes: [s1, s2],
        }
    }

    /// `W₁ + W₂ − Q₁ − Q₂`, zero up to rounding.
    pub fn closure_defect(&self) -> f64 {
        self.w1 + self.w2 - self.q1 - self.q2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleResult {
    pub config: CycleConfig,
    pub thermal: Option<MediumResult>,
    pub prethermal: Option<MediumResult>,
}

fn outcome(traj: &StrokeTrajectory, distances: Vec<DistancePoint>) -> StrokeOutcome {
    StrokeOutcome {
        path: traj.path,
        records: traj.records.clone(),
        clamp_events: traj.clamp_events,
        work_integral: traj.work_integral(),
        distances,
    }
}

fn distance_curve(dm: &DiscreteModel, traj: &StrokeTrajectory, start: &ThermalPoint) -> Result<Vec<DistancePoint>> {
    let mut out = Vec::with_capacity(traj.snapshots.len());
    let mut warm = (start.beta, start.mu);
    let mut guess = start.epsilon.clone();
    for (step, chi, filling) in &traj.snapshots {
        let dmx = dm.at_control(*chi)?;
        let density = dmx.root_density(filling)?;
        let reference = equal_energy_reference(&dmx, &density, warm, Some(&guess))?;
        let d = gge_distance(&density, &reference.density)?;
        warm = (reference.beta, reference.mu);
        guess = reference.epsilon.clone();
        out.push(DistancePoint {
            step: *step,
            chi: *chi,
            distance: d.value,
            reference_beta: reference.beta,
        });
    }
    Ok(out)
}

fn stroke_failure(name: &str) -> impl FnOnce(Error) -> Error + '_ {
    move |e| Error::CycleFailure {
        stroke: name.to_string(),
        source: Box::new(e),
    }
}

/// Run the full cycle for the selected media. Both media share the baths and
/// the control endpoints.
pub fn run_cycle(config: &CycleConfig) -> Result<CycleResult> {
    config.validate()?;
    let base = DiscreteModel::new(config.model.with_control(config.chi_cold)?, config.numerics)?;
    let dm_cold = base.clone();
    let dm_hot = base.at_control(config.chi_hot)?;
    let bath_cold =
        bath_state(&dm_cold, config.beta_cold, config.magnetization).map_err(stroke_failure("cold bath"))?;
    let bath_hot = bath_state(&dm_hot, config.beta_hot, config.magnetization).map_err(stroke_failure("hot bath"))?;
    let forward = StrokePath::new(config.chi_cold, config.chi_hot, config.steps)?;
    let backward = forward.reversed();

    let thermal = if config.medium.thermal() {
        let t1 = thermal_stroke(&dm_cold, &bath_cold, &forward).map_err(stroke_failure("thermal stroke 1"))?;
        let t2 = thermal_stroke(&dm_hot, &bath_hot, &backward).map_err(stroke_failure("thermal stroke 2"))?;
        Some(MediumResult::assemble(
            &bath_cold,
            &bath_hot,
            outcome(&t1, Vec::new()),
            outcome(&t2, Vec::new()),
        ))
    } else {
        None
    };

    let prethermal = if config.medium.prethermal() {
        let opts = GhdOptions {
            bootstrap_substeps: config.bootstrap_substeps,
            snapshot_every: config.distance_every,
        };
        let g1 =
            ghd_stroke(&dm_cold, &bath_cold.filling, &forward, &opts).map_err(stroke_failure("prethermal stroke 1"))?;
        let g2 =
            ghd_stroke(&dm_hot, &bath_hot.filling, &backward, &opts).map_err(stroke_failure("prethermal stroke 2"))?;
        let d1 = distance_curve(&base, &g1, &bath_cold).map_err(stroke_failure("prethermal stroke 1"))?;
        let d2 = distance_curve(&base, &g2, &bath_hot).map_err(stroke_failure("prethermal stroke 2"))?;
        Some(MediumResult::assemble(
            &bath_cold,
            &bath_hot,
            outcome(&g1, d1),
            outcome(&g2, d2),
        ))
    } else {
        None
    };

    Ok(CycleResult {
        config: config.clone(),
        thermal,
        prethermal,
    })
}

/// Projection norms of `∂_χH` at a thermal point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSummary {
    pub beta: f64,
    /// `⟨∂_χH|P^pth|∂_χH⟩`.
    pub prethermal: f64,
    /// `⟨∂_χH|P^th|∂_χH⟩ = aᵀC⁻¹a`.
    pub thermal: f64,
    /// `C_HH − C_HN²/C_NN`, the energy variance at fixed magnon density.
    pub constrained_variance: f64,
    /// `a_H − a_N C_HN/C_NN`.
    pub constrained_response: f64,
}

impl ProjectionSummary {
    pub fn gap(&self) -> f64 {
        self.prethermal - self.thermal
    }
}

pub fn projection_summary(dm: &DiscreteModel, point: &ThermalPoint) -> Result<ProjectionSummary> {
    let bundle = CorrelatorBundle::new(dm, &point.filling)?;
    let c = bundle.thermal_covariance()?;
    let a = bundle.thermal_response()?;
    let x = solve_small(&c, &a)?;
    let thermal = a.iter().zip(&x).map(|(u, v)| u * v).sum();
    let prethermal = bundle.projection_norm(ChargeId::Energy, ChargeId::Energy)?;
    let (constrained_variance, constrained_response) = if a.len() == 2 {
        if c[1][1] <= 0.0 {
            return Err(Error::FlowSingularity { determinant: c[1][1] });
        }
        (c[0][0] - c[0][1] * c[0][1] / c[1][1], a[0] - a[1] * c[0][1] / c[1][1])
    } else {
        (c[0][0], a[0])
    };
    Ok(ProjectionSummary {
        beta: point.beta,
        prethermal,
        thermal,
        constrained_variance,
        constrained_response,
    })
}

/// Work gain of the prethermal medium over the thermal one in an
/// infinitesimal cycle, `δW = −β δχ² (⟨∂_χH|P^pth|∂_χH⟩ − aᵀC⁻¹a)`.
pub fn infinitesimal_work_gap(dm: &DiscreteModel, point: &ThermalPoint, dchi: f64) -> Result<f64> {
    let p = projection_summary(dm, point)?;
    Ok(-point.beta * dchi * dchi * p.gap())
}

/// Leading-order efficiencies of a skewed infinitesimal cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewedEfficiency {
    pub eta_thermal: f64,
    /// `η_pth/η_th`; `None` where the thermal efficiency vanishes.
    pub ratio: Option<f64>,
    /// `η_th / |δχ|`, independent of the cycle size.
    pub eta_thermal_scaled: f64,
    /// `(η_pth/η_th − 1) / |δχ/δβ|`.
    pub ratio_scaled: Option<f64>,
    /// Signed work response at fixed magnon density; its zeros are the
    /// zeros of the thermal efficiency.
    pub response: f64,
    pub vanishing_thermal_efficiency: bool,
}

const VANISHING_RESPONSE: f64 = 1e-12;

pub fn skewed_efficiencies(
    dm: &DiscreteModel,
    point: &ThermalPoint,
    dchi: f64,
    dbeta: f64,
) -> Result<SkewedEfficiency> {
    if dbeta == 0.0 || !dbeta.is_finite() || !dchi.is_finite() {
        return Err(Error::invalid("skewed cycle needs finite δχ and nonzero δβ"));
    }
    let p = projection_summary(dm, point)?;
    let x = p.constrained_response;
    let eta_thermal_scaled = x.abs() / p.constrained_variance;
    let scale = p.prethermal.abs().sqrt() * p.constrained_variance.abs().sqrt();
    if x.abs() <= VANISHING_RESPONSE * scale.max(f64::MIN_POSITIVE) {
        return Ok(SkewedEfficiency {
            eta_thermal: 0.0,
            ratio: None,
            eta_thermal_scaled: 0.0,
            ratio_scaled: None,
            response: x,
            vanishing_thermal_efficiency: true,
        });
    }
    let ratio_scaled = -point.beta * p.gap() / x.abs();
    Ok(SkewedEfficiency {
        eta_thermal: dchi.abs() * eta_thermal_scaled,
        ratio: Some(1.0 + (dchi / dbeta).abs() * ratio_scaled),
        eta_thermal_scaled,
        ratio_scaled: Some(ratio_scaled),
        response: x,
        vanishing_thermal_efficiency: false,
    })
}

/// Comparison of a small finite cycle with the infinitesimal relations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfGapReport {
    pub dchi: f64,
    pub dbeta: f64,
    /// Closed-form `δW` at the starting point.
    pub work_gap: f64,
    pub w1_gap: f64,
    pub w2_gap: f64,
    /// `Q_abs^pth − Q_abs^th`, which equals `+½δW` for extracted work.
    pub heat_gap: f64,
    pub w1_defect: f64,
    pub w2_defect: f64,
    pub heat_defect: f64,
    /// `η_pth/η_th` from the two cycles.
    pub ratio: f64,
    /// `(1 + δW/W^th)(1 + δW/2Q_abs^th)⁻¹` with the measured `δW`.
    pub ratio_identity: f64,
    pub thermal: MediumResult,
    pub prethermal: MediumResult,
}

/// Run a cycle from `(χ, β)` to `(χ + δχ, β + δβ)` with both media and
/// measure the deviations from the half-gap relations.
pub fn half_gap_relations(
    dm: &DiscreteModel,
    point: &ThermalPoint,
    dchi: f64,
    dbeta: f64,
    steps: usize,
) -> Result<HalfGapReport> {
    let mut config = CycleConfig::new(
        *dm.model(),
        (point.chi, point.chi + dchi),
        (point.beta, point.beta + dbeta),
        point.magnetization,
    );
    config.numerics = *dm.numerics();
    config.steps = steps;
    let result = run_cycle(&config)?;
    let th = result.thermal.expect("both media");
    let pth = result.prethermal.expect("both media");
    let work_gap = infinitesimal_work_gap(dm, point, dchi)?;
    let w1_gap = pth.w1 - th.w1;
    let w2_gap = pth.w2 - th.w2;
    let heat_gap = pth.q_abs - th.q_abs;
    let measured = pth.work - th.work;
    let ratio = (pth.work / pth.q_abs) / (th.work / th.q_abs);
    let ratio_identity = (1.0 + measured / th.work) / (1.0 + measured / (2.0 * th.q_abs));
    Ok(HalfGapReport {
        dchi,
        dbeta,
        work_gap,
        w1_gap,
        w2_gap,
        heat_gap,
        w1_defect: (w1_gap - 0.5 * work_gap).abs(),
        w2_defect: (w2_gap - 0.5 * work_gap).abs(),
        heat_defect: (heat_gap - 0.5 * work_gap).abs(),
        ratio,
        ratio_identity,
        thermal: th,
        prethermal: pth,
    })
}

/// A rectangular scan of infinitesimal-cycle efficiencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub model: Model,
    /// Inverse temperatures of the rows.
    pub betas: Vec<f64>,
    /// Control values of the columns.
    pub chis: Vec<f64>,
    pub magnetization: Option<f64>,
    pub numerics: Numerics,
    /// Cycle size used for the unscaled columns.
    pub dchi: f64,
    pub dbeta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub beta: f64,
    pub chi: f64,
    pub mu: Option<f64>,
    pub work_gap: Option<f64>,
    pub efficiency: Option<SkewedEfficiency>,
    /// Failure message when the point could not be solved.
    pub error: Option<String>,
}

impl ScanPoint {
    /// `sign(ratio − 1) = −sign(β)`, or `None` without a ratio.
    pub fn sign_ok(&self) -> Option<bool> {
        let r = self.efficiency.as_ref()?.ratio?;
        Some(if self.beta == 0.0 {
            r == 1.0
        } else {
            (r - 1.0) * self.beta < 0.0
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfinitesimalReport {
    pub config: ScanConfig,
    /// Row-major over `(beta, chi)`.
    pub points: Vec<ScanPoint>,
}

fn scan_point(base: &DiscreteModel, config: &ScanConfig, beta: f64, chi: f64) -> ScanPoint {
    let solve = || -> Result<(ThermalPoint, f64, SkewedEfficiency)> {
        let dm = base.at_control(chi)?;
        let p = bath_state(&dm, beta, config.magnetization)?;
        let gap = infinitesimal_work_gap(&dm, &p, config.dchi)?;
        let eff = skewed_efficiencies(&dm, &p, config.dchi, config.dbeta)?;
        Ok((p, gap, eff))
    };
    match solve() {
        Ok((p, gap, eff)) => ScanPoint {
            beta,
            chi,
            mu: p.magnetization.map(|_| p.mu),
            work_gap: Some(gap),
            efficiency: Some(eff),
            error: None,
        },
        Err(e) => ScanPoint {
            beta,
            chi,
            mu: None,
            work_gap: None,
            efficiency: None,
            error: Some(e.to_string()),
        },
    }
}

/// Evaluate the skewed efficiencies on every `(β, χ)` pair. Points are
/// independent and distributed over `workers` threads; the output order does
/// not depend on the worker count. Failed points are recorded, not fatal.
pub fn grid_scan(config: &ScanConfig, workers: usize) -> Result<InfinitesimalReport> {
    config.numerics.validate()?;
    if config.betas.is_empty() || config.chis.is_empty() {
        return Err(Error::invalid(
            "scan needs at least one temperature and one control value",
        ));
    }
    if config.model.is_interacting() && config.magnetization.is_none() {
        return Err(Error::invalid("fixed magnetization is required"));
    }
    let first = config.chis[0];
    let base = DiscreteModel::new(config.model.with_control(first)?, config.numerics)?;
    let pairs: Vec<(f64, f64)> = config
        .betas
        .iter()
        .flat_map(|&b| config.chis.iter().map(move |&c| (b, c)))
        .collect();
    let workers = workers.max(1).min(pairs.len());
    let mut points: Vec<Option<ScanPoint>> = vec![None; pairs.len()];
    if workers == 1 {
        for (slot, &(b, c)) in points.iter_mut().zip(&pairs) {
            *slot = Some(scan_point(&base, config, b, c));
        }
    } else {
        let chunk = pairs.len().div_ceil(workers);
        std::thread::scope(|s| {
            for (slots, chunk_pairs) in points.chunks_mut(chunk).zip(pairs.chunks(chunk)) {
                let base = &base;
                s.spawn(move || {
                    for (slot, &(b, c)) in slots.iter_mut().zip(chunk_pairs) {
                        *slot = Some(scan_point(base, config, b, c));
                    }
                });
            }
        });
    }
    Ok(InfinitesimalReport {
        config: config.clone(),
        points: points.into_iter().map(|p| p.expect("every point evaluated")).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isochore_from_bath_state_is_free() {
        let dm = DiscreteModel::new(Model::xxz(-1.0, 2.0, 4).unwrap(), Numerics::with_cells(48)).unwrap();
        let p = bath_state(&dm, 1.0, Some(0.45)).unwrap();
        let (out, q) = isochore(&dm, 1.0, Some(0.45), &p.filling).unwrap();
        assert!(q.abs() < 1e-12);
        assert!((out.magnetization.unwrap() - 0.45).abs() < 1e-10);
    }

    #[test]
    fn reference_recovers_thermal_state() {
        let dm = DiscreteModel::new(Model::xxz(-1.0, 2.0, 4).unwrap(), Numerics::with_cells(48)).unwrap();
        let p = dm.thermal_point(0.8, 1.2, None).unwrap();
        let r = equal_energy_reference(&dm, &p.density, (0.3, 0.5), None).unwrap();
        assert!((r.beta - 0.8).abs() < 1e-9 && (r.mu - 1.2).abs() < 1e-9);
        assert!(gge_distance(&p.density, &r.density).unwrap().value < 1e-9);
    }

    #[test]
    fn config_validation() {
        let m = Model::ising(0.5).unwrap();
        assert!(CycleConfig::new(m, (0.5, 0.5), (1.0, 2.0), None).validate().is_err());
        assert!(CycleConfig::new(m, (0.5, 0.7), (1.0, 1.0), None).validate().is_err());
        assert!(CycleConfig::new(m, (0.5, 0.7), (1.0, 2.0), None).validate().is_ok());
        let x = Model::xxz(-1.0, 2.0, 4).unwrap();
        assert!(CycleConfig::new(x, (2.0, 3.0), (1.0, 2.0), None).validate().is_err());
        assert!(CycleConfig::new(x, (2.0, 0.5), (1.0, 2.0), Some(0.4))
            .validate()
            .is_err());
    }

    #[test]
    fn infinite_temperature_has_no_gap() {
        let dm = DiscreteModel::new(Model::ising(0.7).unwrap(), Numerics::with_cells(64)).unwrap();
        let p = dm.thermal_point(0.0, 0.0, None).unwrap();
        assert_eq!(infinitesimal_work_gap(&dm, &p, 0.1).unwrap(), 0.0);
        let e = skewed_efficiencies(&dm, &p, 1e-3, 0.1).unwrap();
        assert_eq!(e.ratio, Some(1.0));
    }
}
