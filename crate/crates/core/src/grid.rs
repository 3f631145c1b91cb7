//! Rapidity grids and string spectra.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of cells accepted by [`RapidityGrid::uniform`].
pub const MIN_CELLS: usize = 8;

const UNIFORM_RTOL: f64 = 1e-9;

/// A uniform partition of a Brillouin zone into cells.
///
/// Functions on the grid are sampled at cell midpoints; the nodes are the
/// cell boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct RapidityGrid {
    nodes: Vec<f64>,
    midpoints: Vec<f64>,
    widths: Vec<f64>,
}

impl RapidityGrid {
    /// Uniform grid with `n_cells` cells spanning `domain`.
    pub fn uniform(n_cells: usize, domain: (f64, f64)) -> Result<Self> {
        let (lo, hi) = domain;
        if n_cells < MIN_CELLS {
            return Err(Error::invalid(format!(
                "grid needs at least {MIN_CELLS} cells, got {n_cells}"
            )));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::invalid(format!("degenerate domain [{lo}, {hi}]")));
        }
        let span = hi - lo;
        let mut nodes: Vec<f64> = (0..=n_cells)
            .map(|i| lo + span * (i as f64) / (n_cells as f64))
            .collect();
        nodes[0] = lo;
        nodes[n_cells] = hi;
        Self::from_nodes(nodes)
    }

    /// Rebuild a grid from its nodes. The nodes must be strictly increasing
    /// and uniformly spaced.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::invalid("grid needs at least two nodes"));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("grid nodes must be finite"));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("grid nodes must be strictly increasing"));
        }
        let n = nodes.len() - 1;
        let spacing = (nodes[n] - nodes[0]) / n as f64;
        let widths: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        if widths.iter().any(|w| (w - spacing).abs() > UNIFORM_RTOL * spacing) {
            return Err(Error::invalid("only uniform grids are supported"));
        }
        let midpoints = nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(Self {
            nodes,
            midpoints,
            widths,
        })
    }

    pub fn len(&self) -> usize {
        self.widths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.widths.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    /// Length of the zone, which is also the period of every grid function.
    pub fn period(&self) -> f64 {
        let (lo, hi) = self.domain();
        hi - lo
    }

    /// Common cell width.
    pub fn spacing(&self) -> f64 {
        self.period() / self.len() as f64
    }

    /// Map `lambda` into `[lo, hi)` using the zone periodicity.
    pub fn wrap(&self, lambda: f64) -> f64 {
        let (lo, _) = self.domain();
        let period = self.period();
        let mut x = lo + (lambda - lo).rem_euclid(period);
        if x >= lo + period {
            x -= period;
        }
        x
    }

    /// Midpoint-rule integral of a sampled function.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.widths).map(|(v, w)| v * w).sum()
    }
}

/// The set of string lengths `1..=max_len` kept in a truncated string basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StringSpectrum {
    max_len: usize,
}

impl StringSpectrum {
    pub fn new(max_len: usize) -> Result<Self> {
        if max_len == 0 {
            return Err(Error::invalid("string cutoff must be at least 1"));
        }
        Ok(Self { max_len })
    }

    /// The single-species spectrum used by free models.
    pub fn single() -> Self {
        Self { max_len: 1 }
    }

    /// Rebuild from an explicit list, which must read `1, 2, ..., n`.
    pub fn from_lengths(lengths: &[usize]) -> Result<Self> {
        if lengths.is_empty() || lengths.iter().enumerate().any(|(i, &l)| l != i + 1) {
            return Err(Error::invalid("string lengths must be 1..N consecutively"));
        }
        Ok(Self { max_len: lengths.len() })
    }

    pub fn len(&self) -> usize {
        self.max_len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lengths(&self) -> impl Iterator<Item = usize> {
        1..=self.max_len
    }
}
