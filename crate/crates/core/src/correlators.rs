//! Exact correlators on a macrostate: covariances, Hellmann–Feynman charge
//! derivatives, susceptibilities, effective force and projection norms.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::models::ChargeId;
use crate::state::{Field, FillingState};
use crate::tba::DiscreteModel;

#[derive(Debug, Clone)]
struct ChargeData {
    dressed: Field,
    dlambda_dressed: Field,
    lambda_dressed: Field,
}

/// Dressed quantities of one state, computed once.
#[derive(Debug, Clone)]
pub struct CorrelatorBundle {
    n_strings: usize,
    n_cells: usize,
    widths: Vec<f64>,
    filling: Field,
    rho: Field,
    /// `ρ (1 − ϑ)`.
    weight: Field,
    dp_dressed: Field,
    f_dressed: Field,
    charges: HashMap<ChargeId, ChargeData>,
    bare_dchi: HashMap<ChargeId, Field>,
    bare_dlambda: HashMap<ChargeId, Field>,
    thermal: Vec<ChargeId>,
}

impl CorrelatorBundle {
    pub fn new(dm: &DiscreteModel, filling: &FillingState) -> Result<Self> {
        let th = filling.values().clone();
        if th.n_strings() != dm.n_strings() || th.n_cells() != dm.grid().len() {
            return Err(Error::invalid("filling does not match the model grid"));
        }
        let dp_dressed = dm.dress(&th, dm.dlambda_momentum())?;
        let rho = th.zip_map(&dp_dressed, |t, d| t * d / (2.0 * PI));
        let weight = rho.zip_map(&th, |r, t| r * (1.0 - t));
        let convolve = |g: &Field| -> Field {
            let tg = th.zip_map(g, |t, x| t * x);
            dm.dchi_kernel().apply(&tg)
        };
        let conv = convolve(&dp_dressed);
        let f = conv.zip_map(dm.dchi_momentum(), |c, d| c - d);
        let f_dressed = dm.dress(&th, &f)?;
        let thermal = dm.model().thermal_charges().to_vec();
        let mut charges = HashMap::new();
        let mut bare_dchi = HashMap::new();
        let mut bare_dlambda = HashMap::new();
        for &id in &thermal {
            let dressed = dm.dress(&th, dm.charge(id))?;
            let dlam = dm.dlambda_charge(id);
            let dlambda_dressed = dm.dress(&th, &dlam)?;
            let dchi = dm.dchi_charge(id);
            let lambda = convolve(&dlambda_dressed).zip_map(&dchi, |c, d| c - d);
            let lambda_dressed = dm.dress(&th, &lambda)?;
            charges.insert(
                id,
                ChargeData {
                    dressed,
                    dlambda_dressed,
                    lambda_dressed,
                },
            );
            bare_dchi.insert(id, dchi);
            bare_dlambda.insert(id, dlam);
        }
        Ok(Self {
            n_strings: th.n_strings(),
            n_cells: th.n_cells(),
            widths: dm.grid().widths().to_vec(),
            filling: th,
            rho,
            weight,
            dp_dressed,
            f_dressed,
            charges,
            bare_dchi,
            bare_dlambda,
            thermal,
        })
    }

    /// Thermal charge set of the chain.
    pub fn thermal_charges(&self) -> &[ChargeId] {
        &self.thermal
    }

    fn data(&self, id: ChargeId) -> Result<&ChargeData> {
        self.charges
            .get(&id)
            .ok_or_else(|| Error::invalid(format!("charge {id:?} is not defined for this chain")))
    }

    fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        let mut s = 0.0;
        for k in 0..self.n_strings * self.n_cells {
            s += self.widths[k % self.n_cells] * f(k);
        }
        s
    }

    pub fn weight(&self) -> &Field {
        &self.weight
    }

    pub fn dressed_dlambda_momentum(&self) -> &Field {
        &self.dp_dressed
    }

    pub fn dressed_f(&self) -> &Field {
        &self.f_dressed
    }

    pub fn dressed_charge(&self, id: ChargeId) -> Result<&Field> {
        Ok(&self.data(id)?.dressed)
    }

    /// `⟨Q_i Q_j⟩_c / L = ∫ q_i^dr ρ(1−ϑ) q_j^dr`.
    pub fn covariance(&self, i: ChargeId, j: ChargeId) -> Result<f64> {
        let (qi, qj) = (&self.data(i)?.dressed, &self.data(j)?.dressed);
        let w = self.weight.as_slice();
        Ok(self.integrate(|k| qi.as_slice()[k] * w[k] * qj.as_slice()[k]))
    }

    /// Effective force `f^dr / (∂_λ p)^dr`.
    pub fn effective_force(&self, grid_midpoints: &[f64]) -> Result<Field> {
        let mut out = Field::zeros(self.n_strings, self.n_cells);
        for a in 0..self.n_strings {
            for j in 0..self.n_cells {
                let d = self.dp_dressed.get(a, j);
                if d.abs() < 1e-300 || !d.is_finite() {
                    return Err(Error::SingularForce {
                        string: a + 1,
                        lambda: grid_midpoints[j],
                    });
                }
                out.string_mut(a)[j] = self.f_dressed.get(a, j) / d;
            }
        }
        Ok(out)
    }

    /// `⟨∂_χ Q_j⟩ / L = ∫ (∂_χ q_j ρ + (1/2π) ∂_λ q_j f^dr ϑ)`.
    pub fn dcharge_expectation(&self, j: ChargeId) -> Result<f64> {
        self.data(j)?;
        let dchi = self.bare_dchi[&j].as_slice();
        let dlam = self.bare_dlambda[&j].as_slice();
        let (rho, fdr, th) = (self.rho.as_slice(), self.f_dressed.as_slice(), self.filling.as_slice());
        Ok(self.integrate(|k| dchi[k] * rho[k] + dlam[k] * fdr[k] * th[k] / (2.0 * PI)))
    }

    /// `f^dr (∂_λ q)^dr / (∂_λ p)^dr − Λ^dr`, the vector representing
    /// `∂_χ Q` in the projection formulas.
    fn projected(&self, id: ChargeId) -> Result<Vec<f64>> {
        let d = self.data(id)?;
        Ok((0..self.n_strings * self.n_cells)
            .map(|k| {
                self.f_dressed.as_slice()[k] * d.dlambda_dressed.as_slice()[k] / self.dp_dressed.as_slice()[k]
                    - d.lambda_dressed.as_slice()[k]
            })
            .collect())
    }

    /// `⟨Q_i ∂_χ Q_j⟩_c / L`.
    pub fn susceptibility(&self, i: ChargeId, j: ChargeId) -> Result<f64> {
        let qi = &self.data(i)?.dressed;
        let v = self.projected(j)?;
        let w = self.weight.as_slice();
        Ok(self.integrate(|k| qi.as_slice()[k] * w[k] * v[k]))
    }

    /// `⟨∂_χ Q_i | P^pth | ∂_χ Q_j⟩`, the norm of `∂_χ Q` projected on all
    /// conserved charges.
    pub fn projection_norm(&self, i: ChargeId, j: ChargeId) -> Result<f64> {
        let vi = self.projected(i)?;
        let vj = self.projected(j)?;
        let w = self.weight.as_slice();
        Ok(self.integrate(|k| vi[k] * w[k] * vj[k]))
    }

    /// Covariance over the thermal charge set, row-major.
    pub fn thermal_covariance(&self) -> Result<Vec<Vec<f64>>> {
        let ids = &self.thermal;
        ids.iter()
            .map(|&i| ids.iter().map(|&j| self.covariance(i, j)).collect())
            .collect()
    }

    /// `a_i = ⟨Q_i ∂_χ H⟩_c` over the thermal charge set.
    pub fn thermal_response(&self) -> Result<Vec<f64>> {
        self.thermal
            .iter()
            .map(|&i| self.susceptibility(i, ChargeId::Energy))
            .collect()
    }

    /// `⟨∂_χ H | P^th | ∂_χ H⟩ = aᵀ C⁻¹ a` over the thermal charges.
    pub fn thermal_projection_norm(&self) -> Result<f64> {
        let c = self.thermal_covariance()?;
        let a = self.thermal_response()?;
        let x = solve_small(&c, &a)?;
        Ok(a.iter().zip(&x).map(|(u, v)| u * v).sum())
    }

    /// `⟨∂_χ H | P^pth | ∂_χ H⟩ − ⟨∂_χ H | P^th | ∂_χ H⟩ ≥ 0`.
    pub fn projection_gap(&self) -> Result<f64> {
        Ok(self.projection_norm(ChargeId::Energy, ChargeId::Energy)? - self.thermal_projection_norm()?)
    }
}

/// Solve a 1×1 or 2×2 linear system.
pub fn solve_small(c: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    match b.len() {
        1 => {
            if c[0][0] == 0.0 || !c[0][0].is_finite() {
                return Err(Error::FlowSingularity { determinant: c[0][0] });
            }
            Ok(vec![b[0] / c[0][0]])
        }
        2 => {
            let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
            let scale = c[0][0].abs() * c[1][1].abs() + c[0][1].abs() * c[1][0].abs();
            if !(det.abs() > 1e-14 * scale) {
                return Err(Error::FlowSingularity { determinant: det });
            }
            Ok(vec![
                (c[1][1] * b[0] - c[0][1] * b[1]) / det,
                (c[0][0] * b[1] - c[1][0] * b[0]) / det,
            ])
        }
        n => Err(Error::invalid(format!("unsupported system size {n}"))),
    }
}
