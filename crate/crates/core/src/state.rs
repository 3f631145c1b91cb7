//! Per-string fields, filling and root-density states, interpolation and
//! state distances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RapidityGrid, StringSpectrum};

/// Fillings within this distance outside `[0, 1]` are snapped silently.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

/// Offsets (in cell units) below this are treated as exact hits on a
/// midpoint so that stored values are reproduced bit for bit.
const SNAP_OFFSET: f64 = 1e-12;

/// A function of (string, cell), stored string-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    n_strings: usize,
    n_cells: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(n_strings: usize, n_cells: usize) -> Self {
        Self::constant(n_strings, n_cells, 0.0)
    }

    pub fn constant(n_strings: usize, n_cells: usize, value: f64) -> Self {
        Self {
            n_strings,
            n_cells,
            data: vec![value; n_strings * n_cells],
        }
    }

    /// Build from `f(string_index, cell)` with zero-based string index.
    pub fn from_fn(n_strings: usize, n_cells: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n_strings * n_cells);
        for a in 0..n_strings {
            for j in 0..n_cells {
                data.push(f(a, j));
            }
        }
        Self {
            n_strings,
            n_cells,
            data,
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_strings = rows.len();
        if n_strings == 0 {
            return Err(Error::invalid("field needs at least one string"));
        }
        let n_cells = rows[0].len();
        if rows.iter().any(|r| r.len() != n_cells) {
            return Err(Error::invalid("ragged field rows"));
        }
        Ok(Self {
            n_strings,
            n_cells,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n_strings(&self) -> usize {
        self.n_strings
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn string(&self, a: usize) -> &[f64] {
        &self.data[a * self.n_cells..(a + 1) * self.n_cells]
    }

    pub fn string_mut(&mut self, a: usize) -> &mut [f64] {
        &mut self.data[a * self.n_cells..(a + 1) * self.n_cells]
    }

    pub fn get(&self, a: usize, j: usize) -> f64 {
        self.data[a * self.n_cells + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.n_strings == other.n_strings && self.n_cells == other.n_cells
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            n_strings: self.n_strings,
            n_cells: self.n_cells,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert!(self.same_shape(other), "field shape mismatch");
        Field {
            n_strings: self.n_strings,
            n_cells: self.n_cells,
            data: self.data.iter().zip(&other.data).map(|(&x, &y)| f(x, y)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_strings).map(|a| self.string(a).to_vec()).collect()
    }

    /// Midpoint-rule integral of each string over the grid.
    pub fn integrals(&self, grid: &RapidityGrid) -> Vec<f64> {
        (0..self.n_strings).map(|a| grid.integrate(self.string(a))).collect()
    }
}

/// Result of a single interpolation query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interpolated {
    pub value: f64,
    /// The unclamped value fell outside `[0, 1]` by more than
    /// [`CLAMP_TOLERANCE`].
    pub clamped: bool,
}

/// Three-point quadratic interpolation of midpoint samples of a periodic
/// function.
///
/// The stencil is centred on the nearest midpoint; a query exactly on a node
/// uses the lower cell.
pub fn quadratic_periodic(values: &[f64], grid: &RapidityGrid, lambda: f64) -> f64 {
    let n = values.len();
    debug_assert_eq!(n, grid.len());
    let (lo, _) = grid.domain();
    let x = grid.wrap(lambda);
    let t = (x - lo) / grid.spacing() - 0.5;
    let i = (t - 0.5).ceil();
    let delta = t - i;
    let i = (i as isize).rem_euclid(n as isize) as usize;
    let centre = values[i];
    if delta.abs() < SNAP_OFFSET {
        return centre;
    }
    let left = values[(i + n - 1) % n];
    let right = values[(i + 1) % n];
    centre + 0.5 * delta * (right - left) + 0.5 * delta * delta * (right - 2.0 * centre + left)
}

/// Five-point quartic interpolation of midpoint samples of a periodic
/// function, with the same stencil centring as [`quadratic_periodic`].
pub fn quartic_periodic(values: &[f64], grid: &RapidityGrid, lambda: f64) -> f64 {
    let n = values.len();
    debug_assert_eq!(n, grid.len());
    let (lo, _) = grid.domain();
    let x = grid.wrap(lambda);
    let t = (x - lo) / grid.spacing() - 0.5;
    let i = (t - 0.5).ceil();
    let d = t - i;
    let i = (i as isize).rem_euclid(n as isize) as usize;
    if d.abs() < SNAP_OFFSET {
        return values[i];
    }
    let at = |k: isize| values[(i as isize + k).rem_euclid(n as isize) as usize];
    let d2 = d * d;
    let w = [
        d * (d2 - 1.0) * (d - 2.0) / 24.0,
        -d * (d - 1.0) * (d2 - 4.0) / 6.0,
        (d2 - 1.0) * (d2 - 4.0) / 4.0,
        -d * (d + 1.0) * (d2 - 4.0) / 6.0,
        d * (d2 - 1.0) * (d + 2.0) / 24.0,
    ];
    (-2..=2).zip(w).map(|(k, wk)| wk * at(k)).sum()
}

/// A per-string filling function on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FillingRepr", into = "FillingRepr")]
pub struct FillingState {
    grid: RapidityGrid,
    strings: StringSpectrum,
    values: Field,
}

impl FillingState {
    /// Validate shape and range. Values within [`CLAMP_TOLERANCE`] of the
    /// unit interval are snapped onto it.
    pub fn new(grid: RapidityGrid, strings: StringSpectrum, mut values: Field) -> Result<Self> {
        if values.n_strings() != strings.len() || values.n_cells() != grid.len() {
            return Err(Error::invalid(format!(
                "filling shape {}x{} does not match {} strings x {} cells",
                values.n_strings(),
                values.n_cells(),
                strings.len(),
                grid.len()
            )));
        }
        let n_cells = grid.len();
        for (k, v) in values.as_mut_slice().iter_mut().enumerate() {
            if !(*v >= -CLAMP_TOLERANCE && *v <= 1.0 + CLAMP_TOLERANCE) {
                return Err(Error::FillingOutOfRange {
                    string: k / n_cells + 1,
                    cell: k % n_cells,
                    value: *v,
                });
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(Self { grid, strings, values })
    }

    pub fn constant(grid: RapidityGrid, strings: StringSpectrum, value: f64) -> Result<Self> {
        let values = Field::constant(strings.len(), grid.len(), value);
        Self::new(grid, strings, values)
    }

    pub fn grid(&self) -> &RapidityGrid {
        &self.grid
    }

    pub fn strings(&self) -> StringSpectrum {
        self.strings
    }

    pub fn values(&self) -> &Field {
        &self.values
    }

    /// Filling of string `string` (1-based length) at an arbitrary rapidity.
    pub fn interpolate(&self, string: usize, lambda: f64) -> Result<Interpolated> {
        if string == 0 || string > self.strings.len() {
            return Err(Error::invalid(format!(
                "string {string} outside 1..={}",
                self.strings.len()
            )));
        }
        let raw = quadratic_periodic(self.values.string(string - 1), &self.grid, lambda);
        let clamped = !(-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&raw);
        Ok(Interpolated {
            value: raw.clamp(0.0, 1.0),
            clamped,
        })
    }
}

/// Interpolated filling, clamped to `[0, 1]`.
pub fn interpolate_filling(state: &FillingState, string: usize, lambda: f64) -> Result<f64> {
    state.interpolate(string, lambda).map(|r| r.value)
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    nodes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FillingRepr {
    grid: GridRepr,
    strings: Vec<usize>,
    values: Vec<Vec<f64>>,
}

impl From<FillingState> for FillingRepr {
    fn from(s: FillingState) -> Self {
        FillingRepr {
            grid: GridRepr {
                nodes: s.grid.nodes().to_vec(),
            },
            strings: s.strings.lengths().collect(),
            values: s.values.to_rows(),
        }
    }
}

impl TryFrom<FillingRepr> for FillingState {
    type Error = Error;

    fn try_from(r: FillingRepr) -> Result<Self> {
        let grid = RapidityGrid::from_nodes(r.grid.nodes)?;
        let strings = StringSpectrum::from_lengths(&r.strings)?;
        let values = Field::from_rows(r.values)?;
        FillingState::new(grid, strings, values)
    }
}

/// Root densities and total densities of states.
#[derive(Debug, Clone, PartialEq)]
pub struct RootDensityState {
    pub grid: RapidityGrid,
    pub strings: StringSpectrum,
    /// Occupied density per unit rapidity per site.
    pub rho: Field,
    /// Total density of states, `(∂λp)^dr / 2π`.
    pub rho_total: Field,
}

impl RootDensityState {
    /// Per-string particle numbers `∫ρ_a`.
    pub fn particle_numbers(&self) -> Vec<f64> {
        self.rho.integrals(&self.grid)
    }
}

/// Relative L2 distance between two root-density states.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct StateDistance {
    pub value: f64,
}

/// Relative L2 distance of `a` from `reference`, normalised by the
/// reference norm. This is not symmetric in its arguments.
pub fn gge_distance(a: &RootDensityState, reference: &RootDensityState) -> Result<StateDistance> {
    if a.grid.nodes() != reference.grid.nodes() || a.strings != reference.strings {
        return Err(Error::invalid("states live on different grids or string sets"));
    }
    let w = a.grid.widths();
    let mut num = 0.0;
    let mut den = 0.0;
    for s in 0..a.strings.len() {
        for ((x, r), dw) in a.rho.string(s).iter().zip(reference.rho.string(s)).zip(w) {
            num += dw * (x - r) * (x - r);
            den += dw * r * r;
        }
    }
    if den == 0.0 {
        return Err(Error::DegenerateReference);
    }
    Ok(StateDistance {
        value: (num / den).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn zone() -> RapidityGrid {
        RapidityGrid::uniform(64, (-PI / 2.0, PI / 2.0)).unwrap()
    }

    #[test]
    fn constants_reproduced() {
        let st = FillingState::constant(zone(), StringSpectrum::new(2).unwrap(), 0.3).unwrap();
        for &x in &[-2.0, -0.7, 0.0, 0.123, 1.5, 4.0] {
            assert!((interpolate_filling(&st, 2, x).unwrap() - 0.3).abs() < 1e-15);
        }
        assert!(interpolate_filling(&st, 3, 0.0).is_err());
        assert!(interpolate_filling(&st, 0, 0.0).is_err());
    }

    #[test]
    fn linear_profiles_exact() {
        let g = zone();
        let (a, b) = (0.1, 0.45);
        let vals = Field::from_fn(1, g.len(), |_, j| a * g.midpoints()[j] + b);
        let st = FillingState::new(g.clone(), StringSpectrum::single(), vals).unwrap();
        for j in 1..g.len() - 1 {
            let x = g.midpoints()[j] + 0.37 * g.spacing();
            assert!((interpolate_filling(&st, 1, x).unwrap() - (a * x + b)).abs() < 1e-12);
        }
    }

    #[test]
    fn quartic_stencil_is_exact_for_quartics_and_converges() {
        let g = zone();
        let mid = g.midpoints();
        let p = |x: f64| 0.2 + 0.1 * x - 0.3 * x * x + 0.05 * x.powi(3) + 0.02 * x.powi(4);
        let vals: Vec<f64> = mid.iter().map(|&x| p(x)).collect();
        for j in 3..g.len() - 3 {
            let x = mid[j] + 0.41 * g.spacing();
            assert!((quartic_periodic(&vals, &g, x) - p(x)).abs() < 1e-13);
            assert_eq!(quartic_periodic(&vals, &g, mid[j]), vals[j]);
        }
        let err = |n: usize| {
            let g = RapidityGrid::uniform(n, (-PI / 2.0, PI / 2.0)).unwrap();
            let f = |x: f64| (2.0 * x).sin();
            let vals: Vec<f64> = g.midpoints().iter().map(|&x| f(x)).collect();
            (0..200)
                .map(|k| -1.5 + 0.0149 * k as f64)
                .map(|x| (quartic_periodic(&vals, &g, x) - f(x)).abs())
                .fold(0.0, f64::max)
        };
        assert!(err(32) / err(64) > 20.0);
    }

    #[test]
    fn midpoints_reproduced_exactly() {
        let g = zone();
        let vals = Field::from_fn(1, g.len(), |_, j| (0.3 * j as f64).sin().powi(2));
        let st = FillingState::new(g.clone(), StringSpectrum::single(), vals.clone()).unwrap();
        for (j, &x) in g.midpoints().iter().enumerate() {
            assert_eq!(interpolate_filling(&st, 1, x).unwrap(), vals.get(0, j));
        }
    }

    #[test]
    fn out_of_range_rejected_and_snapped() {
        let g = zone();
        let s = StringSpectrum::single();
        assert!(FillingState::constant(g.clone(), s, 1.0 + 1e-9).is_err());
        assert!(FillingState::constant(g.clone(), s, -1e-9).is_err());
        let st = FillingState::constant(g, s, 1.0 + 1e-13).unwrap();
        assert_eq!(st.values().get(0, 0), 1.0);
    }

    #[test]
    fn json_round_trip() {
        let g = zone();
        let vals = Field::from_fn(2, g.len(), |a, j| 1.0 / (3.0 + a as f64 + (j as f64).sqrt()));
        let st = FillingState::new(g, StringSpectrum::new(2).unwrap(), vals).unwrap();
        let text = serde_json::to_string(&st).unwrap();
        let back: FillingState = serde_json::from_str(&text).unwrap();
        assert_eq!(back, st);
    }

    #[test]
    fn distance_basics() {
        let g = zone();
        let s = StringSpectrum::single();
        let rho = Field::from_fn(1, g.len(), |_, j| 1.0 + 0.1 * j as f64);
        let r = RootDensityState {
            grid: g.clone(),
            strings: s,
            rho: rho.clone(),
            rho_total: rho.clone(),
        };
        let a = RootDensityState {
            rho: rho.map(|x| 2.0 * x),
            ..r.clone()
        };
        assert_eq!(gge_distance(&r, &r).unwrap().value, 0.0);
        assert!((gge_distance(&a, &r).unwrap().value - 1.0).abs() < 1e-14);
        let zero = RootDensityState {
            rho: Field::zeros(1, g.len()),
            ..r.clone()
        };
        assert_eq!(gge_distance(&r, &zero), Err(Error::DegenerateReference));
    }
}
