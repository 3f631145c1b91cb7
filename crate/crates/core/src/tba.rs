//! Thermodynamic Bethe ansatz on a discretised rapidity grid.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RapidityGrid;
use crate::kernel::{dchi_kernel_matrix, kernel_matrix, KernelMatrix, KernelQuadrature};
use crate::linalg::{gmres, GmresOptions};
use crate::models::{ChargeId, Model};
use crate::state::{Field, FillingState, RootDensityState};

/// Default number of grid cells.
pub const DEFAULT_CELLS: usize = 400;

/// Discretisation and solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Numerics {
    pub cells: usize,
    pub quadrature: KernelQuadrature,
    /// Sup-norm residual required of the pseudoenergy equation.
    pub newton_tolerance: f64,
    pub max_newton_iterations: usize,
    /// Relative residual required of every linear solve.
    pub linear_tolerance: f64,
    pub max_linear_iterations: usize,
    /// Required accuracy of the magnetization when solving for `μ`.
    pub magnetization_tolerance: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            cells: DEFAULT_CELLS,
            quadrature: KernelQuadrature::Midpoint,
            newton_tolerance: 1e-10,
            max_newton_iterations: 100,
            linear_tolerance: 1e-13,
            max_linear_iterations: 600,
            magnetization_tolerance: 1e-11,
        }
    }
}

impl Numerics {
    pub fn with_cells(cells: usize) -> Self {
        Self {
            cells,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("newton_tolerance", self.newton_tolerance),
            ("linear_tolerance", self.linear_tolerance),
            ("magnetization_tolerance", self.magnetization_tolerance),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_newton_iterations == 0 || self.max_linear_iterations == 0 {
            return Err(Error::invalid("iteration limits must be positive"));
        }
        if self.cells < crate::grid::MIN_CELLS {
            return Err(Error::invalid(format!(
                "grid needs at least {} cells, got {}",
                crate::grid::MIN_CELLS,
                self.cells
            )));
        }
        Ok(())
    }

    fn gmres(&self) -> GmresOptions {
        GmresOptions {
            rtol: self.linear_tolerance,
            max_iterations: self.max_linear_iterations,
            ..GmresOptions::default()
        }
    }
}

/// `ln(1 + e^{−ε})` without overflow.
pub fn softplus_neg(eps: f64) -> f64 {
    if eps > 0.0 {
        (-eps).exp().ln_1p()
    } else {
        -eps + eps.exp().ln_1p()
    }
}

/// `(1 + e^ε)^{−1}` without overflow.
pub fn fermi(eps: f64) -> f64 {
    if eps > 0.0 {
        let t = (-eps).exp();
        t / (1.0 + t)
    } else {
        1.0 / (1.0 + eps.exp())
    }
}

/// Binary entropy `−ϑ ln ϑ − (1−ϑ) ln(1−ϑ)`, zero at the endpoints.
pub fn binary_entropy(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        -t * t.ln() - (1.0 - t) * (-t).ln_1p()
    }
}

/// Solution of the pseudoenergy equation.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoenergyState {
    pub epsilon: Field,
    pub filling: Field,
    pub iterations: usize,
    pub residual: f64,
}

/// A chain at a fixed control parameter together with its grid, bare
/// quantities sampled at the midpoints and the discretised kernels.
#[derive(Debug, Clone)]
pub struct DiscreteModel {
    model: Model,
    grid: RapidityGrid,
    numerics: Numerics,
    dp: Field,
    dchi_p: Field,
    energy: Field,
    dlambda_energy: Field,
    dchi_energy: Field,
    magnons: Field,
    kernel: KernelMatrix,
    dchi_kernel: KernelMatrix,
}

impl DiscreteModel {
    pub fn new(model: Model, numerics: Numerics) -> Result<Self> {
        numerics.validate()?;
        let grid = RapidityGrid::uniform(numerics.cells, model.domain())?;
        Ok(Self::build(model, grid, numerics))
    }

    /// The same chain and grid at another control value.
    pub fn at_control(&self, chi: f64) -> Result<Self> {
        let model = self.model.with_control(chi)?;
        Ok(Self::build(model, self.grid.clone(), self.numerics))
    }

    fn build(model: Model, grid: RapidityGrid, numerics: Numerics) -> Self {
        let ns = model.strings().len();
        let n = grid.len();
        let mid = grid.midpoints().to_vec();
        let sample = |f: &dyn Fn(usize, f64) -> f64| Field::from_fn(ns, n, |a, j| f(a + 1, mid[j]));
        let dp = sample(&|a, x| model.dlambda_momentum(a, x));
        let dchi_p = sample(&|a, x| model.dchi_momentum(a, x));
        let energy = sample(&|a, x| model.energy(a, x));
        let dlambda_energy = sample(&|a, x| model.dlambda_energy(a, x));
        let dchi_energy = sample(&|a, x| model.dchi_energy(a, x));
        let magnons = sample(&|a, _| model.magnons(a));
        let kernel = kernel_matrix(&model, &grid, numerics.quadrature);
        let dchi_kernel = dchi_kernel_matrix(&model, &grid, numerics.quadrature);
        Self {
            model,
            grid,
            numerics,
            dp,
            dchi_p,
            energy,
            dlambda_energy,
            dchi_energy,
            magnons,
            kernel,
            dchi_kernel,
        }
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn control(&self) -> f64 {
        self.model.control()
    }

    pub fn grid(&self) -> &RapidityGrid {
        &self.grid
    }

    pub fn numerics(&self) -> &Numerics {
        &self.numerics
    }

    pub fn n_strings(&self) -> usize {
        self.model.strings().len()
    }

    pub fn kernel(&self) -> &KernelMatrix {
        &self.kernel
    }

    pub fn dchi_kernel(&self) -> &KernelMatrix {
        &self.dchi_kernel
    }

    /// `∂_λ p` on the grid.
    pub fn dlambda_momentum(&self) -> &Field {
        &self.dp
    }

    pub fn dchi_momentum(&self) -> &Field {
        &self.dchi_p
    }

    /// Charge eigenvalue `q(λ)` on the grid.
    pub fn charge(&self, id: ChargeId) -> &Field {
        match id {
            ChargeId::Energy => &self.energy,
            ChargeId::Magnon => &self.magnons,
        }
    }

    pub fn dlambda_charge(&self, id: ChargeId) -> Field {
        match id {
            ChargeId::Energy => self.dlambda_energy.clone(),
            ChargeId::Magnon => Field::zeros(self.n_strings(), self.grid.len()),
        }
    }

    pub fn dchi_charge(&self, id: ChargeId) -> Field {
        match id {
            ChargeId::Energy => self.dchi_energy.clone(),
            ChargeId::Magnon => Field::zeros(self.n_strings(), self.grid.len()),
        }
    }

    /// Driving term `Σ_i β_i q_i(λ)`.
    pub fn driving(&self, multipliers: &[(ChargeId, f64)]) -> Field {
        let mut w = Field::zeros(self.n_strings(), self.grid.len());
        for &(id, b) in multipliers {
            let q = self.charge(id);
            for (wi, qi) in w.as_mut_slice().iter_mut().zip(q.as_slice()) {
                *wi += b * qi;
            }
        }
        w
    }

    /// Thermal driving term `β e + μ N`.
    pub fn thermal_driving(&self, beta: f64, mu: f64) -> Field {
        if self.model.is_interacting() {
            self.driving(&[(ChargeId::Energy, beta), (ChargeId::Magnon, mu)])
        } else {
            self.driving(&[(ChargeId::Energy, beta)])
        }
    }

    fn check_shape(&self, f: &Field) -> Result<()> {
        if f.n_strings() != self.n_strings() || f.n_cells() != self.grid.len() {
            return Err(Error::invalid(format!(
                "field shape {}x{} does not match {}x{}",
                f.n_strings(),
                f.n_cells(),
                self.n_strings(),
                self.grid.len()
            )));
        }
        Ok(())
    }

    /// Solve `(1 + φ ϑ) x = rhs` for `x`.
    fn solve_linear(&self, filling: &Field, rhs: &Field) -> Result<Field> {
        if self.kernel.is_zero() || filling.as_slice().iter().all(|&t| t == 0.0) {
            return Ok(rhs.clone());
        }
        let mut x = rhs.clone();
        let mut tmp = vec![0.0; rhs.len()];
        gmres(
            |v, y| {
                for ((t, &vi), &th) in tmp.iter_mut().zip(v).zip(filling.as_slice()) {
                    *t = vi * th;
                }
                self.kernel.apply_into(&tmp, y);
                for (yi, &vi) in y.iter_mut().zip(v) {
                    *yi += vi;
                }
            },
            rhs.as_slice(),
            x.as_mut_slice(),
            self.numerics.gmres(),
        )?;
        Ok(x)
    }

    /// Dressing `τ^dr = τ − φ ∗ (ϑ τ^dr)`.
    pub fn dress(&self, filling: &Field, tau: &Field) -> Result<Field> {
        self.check_shape(filling)?;
        self.check_shape(tau)?;
        self.solve_linear(filling, tau)
    }

    /// Residual `ε − w − φ ∗ ln(1 + e^{−ε})`.
    pub fn pseudoenergy_residual(&self, driving: &Field, eps: &Field) -> Field {
        let l = eps.map(softplus_neg);
        let kl = self.kernel.apply(&l);
        Field::from_fn(eps.n_strings(), eps.n_cells(), |a, j| {
            eps.get(a, j) - driving.get(a, j) - kl.get(a, j)
        })
    }

    /// Solve the pseudoenergy equation by globalised Newton iteration.
    pub fn solve_pseudoenergy(&self, driving: &Field, initial_guess: Option<&Field>) -> Result<PseudoenergyState> {
        self.check_shape(driving)?;
        if driving.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("driving term is not finite"));
        }
        let mut eps = match initial_guess {
            Some(g) => {
                self.check_shape(g)?;
                g.clone()
            }
            None => driving.clone(),
        };
        let tol = self.numerics.newton_tolerance;
        let mut res = self.pseudoenergy_residual(driving, &eps);
        let mut rnorm = res.max_abs();
        let mut iterations = 0;
        while rnorm >= tol {
            if iterations >= self.numerics.max_newton_iterations {
                return Err(Error::ConvergenceFailure {
                    iterations,
                    residual: rnorm,
                });
            }
            iterations += 1;
            let filling = eps.map(fermi);
            let accepted = match self.solve_linear(&filling, &res) {
                Ok(step) => self.line_search(driving, &eps, &step, rnorm),
                Err(_) => None,
            };
            match accepted {
                Some((e, r, n)) => {
                    eps = e;
                    res = r;
                    rnorm = n;
                }
                None => {
                    let (e, r, n) = self.damped_fixed_point(driving, eps, 50);
                    if !(n < rnorm) {
                        return Err(Error::ConvergenceFailure {
                            iterations,
                            residual: rnorm,
                        });
                    }
                    eps = e;
                    res = r;
                    rnorm = n;
                }
            }
        }
        let filling = eps.map(fermi);
        Ok(PseudoenergyState {
            epsilon: eps,
            filling,
            iterations,
            residual: rnorm,
        })
    }

    fn line_search(&self, driving: &Field, eps: &Field, step: &Field, rnorm: f64) -> Option<(Field, Field, f64)> {
        let mut t = 1.0;
        for _ in 0..30 {
            let trial = eps.zip_map(step, |e, d| e - t * d);
            let res = self.pseudoenergy_residual(driving, &trial);
            let n = res.max_abs();
            if n.is_finite() && n < (1.0 - 1e-4 * t) * rnorm {
                return Some((trial, res, n));
            }
            t *= 0.5;
        }
        None
    }

    fn damped_fixed_point(&self, driving: &Field, mut eps: Field, steps: usize) -> (Field, Field, f64) {
        for _ in 0..steps {
            let l = eps.map(softplus_neg);
            let kl = self.kernel.apply(&l);
            for ((e, &w), &k) in eps.as_mut_slice().iter_mut().zip(driving.as_slice()).zip(kl.as_slice()) {
                *e = 0.5 * *e + 0.5 * (w + k);
            }
        }
        let res = self.pseudoenergy_residual(driving, &eps);
        let n = res.max_abs();
        (eps, res, n)
    }

    /// Wrap a filling field into a validated state on this grid.
    pub fn filling_state(&self, filling: Field) -> Result<FillingState> {
        FillingState::new(self.grid.clone(), self.model.strings(), filling)
    }

    /// Root densities `ρ = ϑ (∂_λ p)^dr / 2π` and total densities.
    pub fn root_density(&self, filling: &FillingState) -> Result<RootDensityState> {
        let th = filling.values();
        let dpdr = self.dress(th, &self.dp)?;
        let rho_total = dpdr.map(|x| x / (2.0 * PI));
        let rho = th.zip_map(&rho_total, |t, r| t * r);
        Ok(RootDensityState {
            grid: self.grid.clone(),
            strings: self.model.strings(),
            rho,
            rho_total,
        })
    }

    /// Per-site expectation `∫ q ρ`.
    pub fn charge_expectation(&self, density: &RootDensityState, id: ChargeId) -> f64 {
        let q = self.charge(id);
        let mut s = 0.0;
        for a in 0..self.n_strings() {
            s += self.grid.integrate(
                &q.string(a)
                    .iter()
                    .zip(density.rho.string(a))
                    .map(|(x, y)| x * y)
                    .collect::<Vec<_>>(),
            );
        }
        s
    }

    /// `⟨σᶻ⟩ = 1 − 2 Σ_j j ∫ρ_j`; `None` for chains without a magnon charge.
    pub fn magnetization(&self, density: &RootDensityState) -> Option<f64> {
        if self.model.is_interacting() {
            Some(1.0 - 2.0 * self.charge_expectation(density, ChargeId::Magnon))
        } else {
            None
        }
    }

    /// Yang–Yang entropy density `Σ_a ∫ ρ_t,a H(ϑ_a)`.
    pub fn yang_yang_entropy(&self, filling: &FillingState, density: &RootDensityState) -> f64 {
        let th = filling.values();
        let mut s = 0.0;
        for a in 0..self.n_strings() {
            let integrand: Vec<f64> = th
                .string(a)
                .iter()
                .zip(density.rho_total.string(a))
                .map(|(&t, &r)| r * binary_entropy(t))
                .collect();
            s += self.grid.integrate(&integrand);
        }
        s
    }

    /// Free-energy density `−(1/2π) Σ_a ∫ ∂_λp_a ln(1 + e^{−ε_a})` of a
    /// solved pseudoenergy.
    pub fn free_energy(&self, eps: &Field) -> f64 {
        let mut f = 0.0;
        for a in 0..self.n_strings() {
            let integrand: Vec<f64> = eps
                .string(a)
                .iter()
                .zip(self.dp.string(a))
                .map(|(&e, &d)| d * softplus_neg(e))
                .collect();
            f -= self.grid.integrate(&integrand) / (2.0 * PI);
        }
        f
    }

    /// Thermal state at fixed multipliers `(β, μ)`; `μ` is ignored for
    /// chains without a magnon charge.
    pub fn thermal_point(&self, beta: f64, mu: f64, guess: Option<&Field>) -> Result<ThermalPoint> {
        let mu = if self.model.is_interacting() { mu } else { 0.0 };
        let driving = self.thermal_driving(beta, mu);
        let sol = self.solve_pseudoenergy(&driving, guess)?;
        self.thermal_from_solution(beta, mu, sol.epsilon, sol.filling)
    }

    fn thermal_from_solution(&self, beta: f64, mu: f64, epsilon: Field, filling: Field) -> Result<ThermalPoint> {
        let filling = self.filling_state(filling)?;
        let density = self.root_density(&filling)?;
        let energy = self.charge_expectation(&density, ChargeId::Energy);
        let magnetization = self.magnetization(&density);
        let entropy = self.yang_yang_entropy(&filling, &density);
        Ok(ThermalPoint {
            chi: self.control(),
            beta,
            mu,
            epsilon,
            filling,
            density,
            energy,
            magnetization,
            entropy,
        })
    }

    /// `∂⟨σᶻ⟩/∂μ = 2 ⟨N²⟩_c` at a solved point.
    fn dmagnetization_dmu(&self, p: &ThermalPoint) -> Result<f64> {
        let th = p.filling.values();
        let ndr = self.dress(th, &self.magnons)?;
        let mut c = 0.0;
        for a in 0..self.n_strings() {
            let integrand: Vec<f64> = (0..self.grid.len())
                .map(|j| {
                    let t = th.get(a, j);
                    ndr.get(a, j).powi(2) * p.density.rho.get(a, j) * (1.0 - t)
                })
                .collect();
            c += self.grid.integrate(&integrand);
        }
        Ok(2.0 * c)
    }

    /// Thermal state at inverse temperature `β` whose magnetization equals
    /// `target_m`, found by a safeguarded Newton search in `μ`. For chains
    /// without a magnon charge the target is ignored.
    pub fn thermal_state(&self, beta: f64, target_m: f64) -> Result<ThermalPoint> {
        self.thermal_state_from(beta, target_m, 0.0, None)
    }

    /// As [`Self::thermal_state`], starting the bracket search at `mu_start`
    /// and warm-starting the pseudoenergy.
    pub fn thermal_state_from(
        &self,
        beta: f64,
        target_m: f64,
        mu_start: f64,
        guess: Option<&Field>,
    ) -> Result<ThermalPoint> {
        if !beta.is_finite() {
            return Err(Error::invalid("beta must be finite"));
        }
        if !self.model.is_interacting() {
            return self.thermal_point(beta, 0.0, guess);
        }
        if !(target_m.is_finite() && target_m > -1.0 && target_m < 1.0) {
            return Err(Error::invalid(format!(
                "target magnetization must lie in (-1, 1), got {target_m}"
            )));
        }
        const MU_LIMIT: f64 = 400.0;
        let tol = self.numerics.magnetization_tolerance;
        let mut cache: Option<(f64, Field)> = guess.map(|g| (mu_start, g.clone()));
        let mut eval = |mu: f64| -> Result<ThermalPoint> {
            let g = cache.as_ref().map(|(m0, e)| {
                let shift = mu - m0;
                Field::from_fn(e.n_strings(), e.n_cells(), |a, j| e.get(a, j) + shift * (a + 1) as f64)
            });
            let p = self.thermal_point(beta, mu, g.as_ref())?;
            cache = Some((mu, p.epsilon.clone()));
            Ok(p)
        };
        let mval = |p: &ThermalPoint| p.magnetization.expect("interacting chain") - target_m;

        let p0 = eval(mu_start)?;
        let f0 = mval(&p0);
        if f0.abs() < tol {
            return Ok(p0);
        }
        // Grow a bracket geometrically; m increases with μ.
        let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
        let mut step = 1.0;
        let mut prev = (mu_start, f0);
        let (mut lo, mut hi, mut current) = loop {
            let mu = mu_start + dir * step;
            if mu.abs() > MU_LIMIT {
                let (a, b) = (target_m + f0, target_m + prev.1);
                return Err(Error::UnreachableMagnetization {
                    target: target_m,
                    beta,
                    low: a.min(b),
                    high: a.max(b),
                });
            }
            let p = eval(mu)?;
            let f = mval(&p);
            if f.abs() < tol {
                return Ok(p);
            }
            if f.signum() != f0.signum() {
                break if dir > 0.0 { (prev.0, mu, p) } else { (mu, prev.0, p) };
            }
            prev = (mu, f);
            step *= 2.0;
        };
        // Safeguarded Newton on the bracket.
        for _ in 0..200 {
            let f = mval(&current);
            if f.abs() < tol || hi - lo < 1e-13 * (1.0 + hi.abs()) {
                return Ok(current);
            }
            if f < 0.0 {
                lo = current.mu;
            } else {
                hi = current.mu;
            }
            let slope = self.dmagnetization_dmu(&current)?;
            let newton = current.mu - f / slope;
            let next = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            current = eval(next)?;
        }
        let f = mval(&current);
        if f.abs() < 1e3 * tol {
            Ok(current)
        } else {
            Err(Error::ConvergenceFailure {
                iterations: 200,
                residual: f.abs(),
            })
        }
    }
}

/// A thermal state with its multipliers and scalar observables.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalPoint {
    pub chi: f64,
    pub beta: f64,
    pub mu: f64,
    pub epsilon: Field,
    pub filling: FillingState,
    pub density: RootDensityState,
    /// Energy density with the ground-state offset dropped.
    pub energy: f64,
    pub magnetization: Option<f64>,
    pub entropy: f64,
}
