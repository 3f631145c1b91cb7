//! Bare quasiparticle data of the supported chains.

mod ising;
mod xxz;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::StringSpectrum;

pub use ising::{ising_dfield_dispersion, ising_dispersion, ising_dlambda_dispersion};
pub use xxz::{xxz_dchi_phase, xxz_kernel, xxz_scattering_phase, xxz_string_energy, xxz_string_momentum};

/// Default number of XXZ strings kept.
pub const DEFAULT_STRING_CUTOFF: usize = 10;

/// Conserved charges that can enter a thermal state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChargeId {
    Energy,
    /// Number of flipped spins; a `j`-string carries `j` magnons.
    Magnon,
}

/// Transverse-field Ising chain; the control parameter is the field `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsingChain {
    pub field: f64,
}

/// Easy-axis XXZ chain `H = −J Σ (σˣσˣ + σʸσʸ + Δ σᶻσᶻ)` with `|Δ| > 1`;
/// the control parameter is `Δ`.
///
/// Quasiparticles are magnon strings built over the fully polarised state.
/// The pair `(J, Δ)` and `(−J, −Δ)` describe the same chain; energies are
/// those of the `J = −1, Δ > 1` branch multiplied by `−J sign(Δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XxzChain {
    pub coupling: f64,
    pub anisotropy: f64,
    pub max_string: usize,
}

impl XxzChain {
    pub fn new(coupling: f64, anisotropy: f64, max_string: usize) -> Result<Self> {
        if !(coupling.is_finite() && coupling != 0.0) {
            return Err(Error::invalid(format!("coupling must be nonzero, got {coupling}")));
        }
        if !(anisotropy.is_finite() && anisotropy.abs() > 1.0) {
            return Err(Error::invalid(format!(
                "anisotropy must satisfy |Δ| > 1, got {anisotropy}"
            )));
        }
        StringSpectrum::new(max_string)?;
        Ok(Self {
            coupling,
            anisotropy,
            max_string,
        })
    }

    /// `θ = arccosh |Δ|`.
    pub fn theta(&self) -> f64 {
        self.anisotropy.abs().acosh()
    }

    fn delta_sign(&self) -> f64 {
        self.anisotropy.signum()
    }

    /// Factor relating energies to the reference branch `J = −1, Δ > 1`.
    pub fn energy_sign(&self) -> f64 {
        -self.coupling * self.delta_sign()
    }
}

/// A chain together with its control parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Model {
    Ising(IsingChain),
    Xxz(XxzChain),
}

impl Model {
    pub fn ising(field: f64) -> Result<Self> {
        if !field.is_finite() {
            return Err(Error::invalid("field must be finite"));
        }
        Ok(Model::Ising(IsingChain { field }))
    }

    pub fn xxz(coupling: f64, anisotropy: f64, max_string: usize) -> Result<Self> {
        XxzChain::new(coupling, anisotropy, max_string).map(Model::Xxz)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Ising(_) => "ising",
            Model::Xxz(_) => "xxz",
        }
    }

    /// Current value of the control parameter (`h` or `Δ`).
    pub fn control(&self) -> f64 {
        match self {
            Model::Ising(m) => m.field,
            Model::Xxz(m) => m.anisotropy,
        }
    }

    /// Same chain at another value of the control parameter.
    pub fn with_control(&self, chi: f64) -> Result<Self> {
        match self {
            Model::Ising(_) => Model::ising(chi),
            Model::Xxz(m) => Model::xxz(m.coupling, chi, m.max_string),
        }
    }

    /// Whether the path `[a, b]` of control values stays in the supported
    /// regime.
    pub fn check_path(&self, a: f64, b: f64) -> Result<()> {
        match self {
            Model::Ising(_) => Ok(()),
            Model::Xxz(_) => {
                if a.abs() > 1.0 && b.abs() > 1.0 && a.signum() == b.signum() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!(
                        "anisotropy path {a} -> {b} leaves the easy-axis regime"
                    )))
                }
            }
        }
    }

    pub fn strings(&self) -> StringSpectrum {
        match self {
            Model::Ising(_) => StringSpectrum::single(),
            Model::Xxz(m) => StringSpectrum::new(m.max_string).expect("validated cutoff"),
        }
    }

    /// Brillouin zone of the rapidity.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Model::Ising(_) => (-PI, PI),
            Model::Xxz(_) => (-PI / 2.0, PI / 2.0),
        }
    }

    pub fn is_interacting(&self) -> bool {
        matches!(self, Model::Xxz(_))
    }

    /// Charges fixed by a thermal bath: energy, plus magnon number for XXZ.
    pub fn thermal_charges(&self) -> &'static [ChargeId] {
        match self {
            Model::Ising(_) => &[ChargeId::Energy],
            Model::Xxz(_) => &[ChargeId::Energy, ChargeId::Magnon],
        }
    }

    /// Momentum `p_a(λ)` of string length `a`.
    pub fn momentum(&self, a: usize, lambda: f64) -> f64 {
        match self {
            Model::Ising(_) => lambda,
            Model::Xxz(m) => xxz::p(a, m.theta(), lambda),
        }
    }

    pub fn dlambda_momentum(&self, a: usize, lambda: f64) -> f64 {
        match self {
            Model::Ising(_) => 1.0,
            Model::Xxz(m) => xxz::dp(a, m.theta(), lambda),
        }
    }

    pub fn dchi_momentum(&self, a: usize, lambda: f64) -> f64 {
        match self {
            Model::Ising(_) => 0.0,
            Model::Xxz(m) => {
                let th = m.theta();
                m.delta_sign() * xxz::dtheta_p(a, th, lambda) / th.sinh()
            }
        }
    }

    pub fn energy(&self, a: usize, lambda: f64) -> f64 {
        match self {
            Model::Ising(m) => ising_dispersion(lambda, m.field),
            Model::Xxz(m) => m.energy_sign() * xxz::energy(a, m.theta(), lambda),
        }
    }

    pub fn dlambda_energy(&self, a: usize, lambda: f64) -> f64 {
        match self {
            Model::Ising(m) => ising_dlambda_dispersion(lambda, m.field),
            Model::Xxz(m) => m.energy_sign() * xxz::dlambda_energy(a, m.theta(), lambda),
        }
    }

    pub fn dchi_energy(&self, a: usize, lambda: f64) -> f64 {
        match self {
            Model::Ising(m) => ising_dfield_dispersion(lambda, m.field),
            Model::Xxz(m) => {
                let th = m.theta();
                m.energy_sign() * m.delta_sign() * xxz::dtheta_energy(a, th, lambda) / th.sinh()
            }
        }
    }

    /// Magnon number carried by string `a`.
    pub fn magnons(&self, a: usize) -> f64 {
        a as f64
    }

    /// Eigenvalue `q(λ)` of a charge on string `a`.
    pub fn charge(&self, id: ChargeId, a: usize, lambda: f64) -> f64 {
        match id {
            ChargeId::Energy => self.energy(a, lambda),
            ChargeId::Magnon => self.magnons(a),
        }
    }

    pub fn dlambda_charge(&self, id: ChargeId, a: usize, lambda: f64) -> f64 {
        match id {
            ChargeId::Energy => self.dlambda_energy(a, lambda),
            ChargeId::Magnon => 0.0,
        }
    }

    pub fn dchi_charge(&self, id: ChargeId, a: usize, lambda: f64) -> f64 {
        match id {
            ChargeId::Energy => self.dchi_energy(a, lambda),
            ChargeId::Magnon => 0.0,
        }
    }

    /// Scattering phase `Θ_{a,b}(λ)`.
    pub fn phase(&self, a: usize, b: usize, lambda: f64) -> f64 {
        match self {
            Model::Ising(_) => 0.0,
            Model::Xxz(m) => {
                let th = m.theta();
                xxz::pair_sum(a, b, |n| xxz::p(n, th, lambda)) / (2.0 * PI)
            }
        }
    }

    /// Kernel `φ_{a,b}(λ) = ∂_λ Θ_{a,b}(λ)`.
    pub fn kernel(&self, a: usize, b: usize, lambda: f64) -> f64 {
        match self {
            Model::Ising(_) => 0.0,
            Model::Xxz(m) => {
                let th = m.theta();
                xxz::pair_sum(a, b, |n| xxz::dp(n, th, lambda)) / (2.0 * PI)
            }
        }
    }

    /// `∂_χ Θ_{a,b}(λ)` at fixed `λ`.
    pub fn dchi_phase(&self, a: usize, b: usize, lambda: f64) -> f64 {
        match self {
            Model::Ising(_) => 0.0,
            Model::Xxz(m) => {
                let th = m.theta();
                m.delta_sign() * xxz::pair_sum(a, b, |n| xxz::dtheta_p(n, th, lambda)) / (2.0 * PI * th.sinh())
            }
        }
    }

    /// A function of `λ` whose derivative is `∂_χ Θ_{a,b}`.
    pub(crate) fn dchi_phase_antiderivative(&self, a: usize, b: usize, lambda: f64) -> f64 {
        match self {
            Model::Ising(_) => 0.0,
            Model::Xxz(m) => {
                let th = m.theta();
                m.delta_sign() * xxz::pair_sum(a, b, |n| xxz::dtheta_p_antiderivative(n, th, lambda))
                    / (2.0 * PI * th.sinh())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central<F: Fn(f64) -> f64>(f: F, x: f64, eps: f64) -> f64 {
        (f(x + eps) - f(x - eps)) / (2.0 * eps)
    }

    #[test]
    fn control_derivatives_match_differences() {
        let eps = 1e-6;
        for &(jc, d) in &[(-1.0, 2.0), (-1.0, -2.5), (1.0, 1.7), (0.5, -3.0)] {
            let m = Model::xxz(jc, d, 4).unwrap();
            for a in 1..=4 {
                for &x in &[-1.1, -0.2, 0.5, 1.4] {
                    let at = |dd: f64| m.with_control(dd).unwrap();
                    let fd = central(|dd| at(dd).momentum(a, x), d, eps);
                    assert!((fd - m.dchi_momentum(a, x)).abs() < 1e-6 * fd.abs().max(1e-3));
                    let fd = central(|dd| at(dd).energy(a, x), d, eps);
                    assert!((fd - m.dchi_energy(a, x)).abs() < 1e-6 * fd.abs().max(1e-3));
                    for b in 1..=4 {
                        let fd = central(|dd| at(dd).phase(a, b, x), d, eps);
                        assert!((fd - m.dchi_phase(a, b, x)).abs() < 1e-6 * fd.abs().max(1e-3));
                    }
                }
            }
        }
        let m = Model::ising(0.7).unwrap();
        for &x in &[-2.0, 0.3, 3.0] {
            let fd = central(|h| Model::ising(h).unwrap().energy(1, x), 0.7, eps);
            assert!((fd - m.dchi_energy(1, x)).abs() < 1e-6 * fd.abs().max(1e-3));
        }
    }

    #[test]
    fn branch_symmetry() {
        let a = Model::xxz(-1.0, 2.0, 3).unwrap();
        let b = Model::xxz(1.0, 2.0, 3).unwrap();
        let c = Model::xxz(1.0, -2.0, 3).unwrap();
        for s in 1..=3 {
            for &x in &[-0.4, 0.0, 0.9] {
                assert_eq!(a.energy(s, x), -b.energy(s, x));
                assert_eq!(a.energy(s, x), c.energy(s, x));
                assert_eq!(a.dchi_energy(s, x), -c.dchi_energy(s, x));
                assert_eq!(a.dchi_momentum(s, x), -c.dchi_momentum(s, x));
                assert_eq!(a.kernel(s, 1, x), c.kernel(s, 1, x));
            }
        }
    }

    #[test]
    fn ising_is_free() {
        let m = Model::ising(0.5).unwrap();
        assert_eq!(m.dlambda_momentum(1, 0.3), 1.0);
        assert_eq!(m.kernel(1, 1, 0.3), 0.0);
        assert_eq!(m.dchi_phase(1, 1, 0.3), 0.0);
        assert_eq!(m.strings().len(), 1);
        assert_eq!(m.thermal_charges(), &[ChargeId::Energy]);
    }

    #[test]
    fn kernel_symmetric_and_even() {
        let m = Model::xxz(-1.0, 1.5, 5).unwrap();
        for a in 1..=5 {
            for b in 1..=5 {
                for &x in &[0.05, 0.6, 1.2] {
                    assert_eq!(m.kernel(a, b, x), m.kernel(b, a, x));
                    assert!((m.kernel(a, b, x) - m.kernel(a, b, -x)).abs() < 1e-14);
                    assert!((m.phase(a, b, x) + m.phase(a, b, -x)).abs() < 1e-14);
                    assert_eq!(m.phase(a, b, x), m.phase(b, a, x));
                }
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(Model::xxz(-1.0, 0.5, 10).is_err());
        assert!(Model::xxz(0.0, 2.0, 10).is_err());
        assert!(Model::xxz(-1.0, 2.0, 0).is_err());
        assert!(Model::xxz(-1.0, 2.0, 3).unwrap().check_path(2.0, -2.0).is_err());
        assert!(Model::xxz(-1.0, 2.0, 3).unwrap().check_path(2.0, 3.0).is_ok());
    }
}
