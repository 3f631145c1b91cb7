//! Discretised convolution operators.
//!
//! On a uniform grid the convolution of a periodic kernel with a
//! midpoint-sampled function is a block-circulant matrix, one circulant block
//! per pair of strings. Blocks are stored by their generating column and
//! applied with FFTs.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::grid::RapidityGrid;
use crate::models::Model;
use crate::state::Field;

/// How the kernel is integrated against piecewise data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelQuadrature {
    /// Kernel sampled at midpoint separations times the cell width. Spectrally
    /// accurate for the smooth periodic kernels of the easy-axis chain.
    #[default]
    Midpoint,
    /// Kernel integrated exactly over each cell through its antiderivative.
    /// Second-order accurate, robust for sharply peaked kernels.
    CellIntegrated,
}

/// A block-circulant operator acting on per-string fields.
#[derive(Clone)]
pub struct KernelMatrix {
    n_strings: usize,
    n_cells: usize,
    /// Generating column of block `(a, b)` at index `a * n_strings + b`;
    /// entry `d` couples cells whose index differs by `d` modulo the grid.
    generators: Vec<Vec<f64>>,
    spectra: Vec<Vec<Complex64>>,
    zero: bool,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for KernelMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelMatrix")
            .field("n_strings", &self.n_strings)
            .field("n_cells", &self.n_cells)
            .field("zero", &self.zero)
            .finish()
    }
}

impl KernelMatrix {
    /// Build from generating columns, `generator(a, b, d)` with zero-based
    /// string indices.
    pub fn from_generators(
        n_strings: usize,
        n_cells: usize,
        mut generator: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_cells);
        let inverse = planner.plan_fft_inverse(n_cells);
        let mut generators = Vec::with_capacity(n_strings * n_strings);
        let mut spectra = Vec::with_capacity(n_strings * n_strings);
        let mut zero = true;
        for a in 0..n_strings {
            for b in 0..n_strings {
                let g: Vec<f64> = (0..n_cells).map(|d| generator(a, b, d)).collect();
                zero &= g.iter().all(|&x| x == 0.0);
                let mut s: Vec<Complex64> = g.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                forward.process(&mut s);
                generators.push(g);
                spectra.push(s);
            }
        }
        Self {
            n_strings,
            n_cells,
            generators,
            spectra,
            zero,
            forward,
            inverse,
        }
    }

    /// The zero operator.
    pub fn zero(n_strings: usize, n_cells: usize) -> Self {
        Self::from_generators(n_strings, n_cells, |_, _, _| 0.0)
    }

    pub fn n_strings(&self) -> usize {
        self.n_strings
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// Matrix element between (string `a`, cell `j`) and (string `b`,
    /// cell `jp`), zero-based.
    pub fn entry(&self, a: usize, j: usize, b: usize, jp: usize) -> f64 {
        let d = (j + self.n_cells - jp) % self.n_cells;
        self.generators[a * self.n_strings + b][d]
    }

    /// Dense row-major matrix over the flattened index `a * n_cells + j`.
    pub fn to_dense(&self) -> Vec<f64> {
        let dim = self.n_strings * self.n_cells;
        let mut m = vec![0.0; dim * dim];
        for a in 0..self.n_strings {
            for j in 0..self.n_cells {
                let row = a * self.n_cells + j;
                for b in 0..self.n_strings {
                    for jp in 0..self.n_cells {
                        m[row * dim + b * self.n_cells + jp] = self.entry(a, j, b, jp);
                    }
                }
            }
        }
        m
    }

    /// `y = K x`.
    pub fn apply(&self, x: &Field) -> Field {
        let mut y = Field::zeros(self.n_strings, self.n_cells);
        self.apply_into(x.as_slice(), y.as_mut_slice());
        y
    }

    /// `y = K x` on flat string-major slices.
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let (ns, n) = (self.n_strings, self.n_cells);
        assert_eq!(x.len(), ns * n);
        assert_eq!(y.len(), ns * n);
        if self.zero {
            y.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let mut xs: Vec<Vec<Complex64>> = (0..ns)
            .map(|b| {
                let mut v: Vec<Complex64> = x[b * n..(b + 1) * n].iter().map(|&r| Complex64::new(r, 0.0)).collect();
                self.forward.process(&mut v);
                v
            })
            .collect();
        let scale = 1.0 / n as f64;
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        for a in 0..ns {
            acc.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for (b, xb) in xs.iter().enumerate() {
                let s = &self.spectra[a * ns + b];
                for ((c, &sv), &xv) in acc.iter_mut().zip(s).zip(xb) {
                    *c += sv * xv;
                }
            }
            self.inverse.process(&mut acc);
            for (out, c) in y[a * n..(a + 1) * n].iter_mut().zip(&acc) {
                *out = c.re * scale;
            }
        }
        xs.clear();
    }
}

/// Signed separation `d · h` of two midpoints whose indices differ by `d`
/// modulo the grid, mapped to the symmetric range.
fn separation(d: usize, n: usize, h: f64) -> f64 {
    if 2 * d <= n {
        d as f64 * h
    } else {
        (d as f64 - n as f64) * h
    }
}

/// Scattering kernel `φ` integrated exactly over each cell,
/// `Θ(mid_j − λ_{j'}) − Θ(mid_j − λ_{j'+1})`.
pub fn cell_kernel_matrix(model: &Model, grid: &RapidityGrid) -> KernelMatrix {
    kernel_matrix(model, grid, KernelQuadrature::CellIntegrated)
}

/// Discretised scattering kernel `φ`.
pub fn kernel_matrix(model: &Model, grid: &RapidityGrid, quadrature: KernelQuadrature) -> KernelMatrix {
    let ns = model.strings().len();
    let n = grid.len();
    if !model.is_interacting() {
        return KernelMatrix::zero(ns, n);
    }
    let h = grid.spacing();
    KernelMatrix::from_generators(ns, n, |a, b, d| {
        let x = separation(d, n, h);
        match quadrature {
            KernelQuadrature::Midpoint => h * model.kernel(a + 1, b + 1, x),
            KernelQuadrature::CellIntegrated => {
                model.phase(a + 1, b + 1, x + 0.5 * h) - model.phase(a + 1, b + 1, x - 0.5 * h)
            }
        }
    })
}

/// Discretised convolution with `∂_χ Θ`; antisymmetric.
pub fn dchi_kernel_matrix(model: &Model, grid: &RapidityGrid, quadrature: KernelQuadrature) -> KernelMatrix {
    let ns = model.strings().len();
    let n = grid.len();
    if !model.is_interacting() {
        return KernelMatrix::zero(ns, n);
    }
    let h = grid.spacing();
    KernelMatrix::from_generators(ns, n, |a, b, d| {
        let x = separation(d, n, h);
        if 2 * d == n {
            // ∂_χΘ is odd and periodic, so it vanishes half a period away.
            return 0.0;
        }
        match quadrature {
            KernelQuadrature::Midpoint => h * model.dchi_phase(a + 1, b + 1, x),
            KernelQuadrature::CellIntegrated => {
                model.dchi_phase_antiderivative(a + 1, b + 1, x + 0.5 * h)
                    - model.dchi_phase_antiderivative(a + 1, b + 1, x - 0.5 * h)
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn fft_apply_matches_dense() {
        let model = Model::xxz(-1.0, 2.0, 3).unwrap();
        let grid = RapidityGrid::uniform(24, (-PI / 2.0, PI / 2.0)).unwrap();
        for q in [KernelQuadrature::Midpoint, KernelQuadrature::CellIntegrated] {
            for k in [kernel_matrix(&model, &grid, q), dchi_kernel_matrix(&model, &grid, q)] {
                let x = Field::from_fn(3, 24, |a, j| ((a * 7 + j * 3) as f64).sin());
                let y = k.apply(&x);
                let dense = k.to_dense();
                let dim = 72;
                for r in 0..dim {
                    let v: f64 = (0..dim).map(|c| dense[r * dim + c] * x.as_slice()[c]).sum();
                    assert!((v - y.as_slice()[r]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn symmetry_of_discrete_kernels() {
        let model = Model::xxz(-1.0, 1.8, 3).unwrap();
        let grid = RapidityGrid::uniform(16, (-PI / 2.0, PI / 2.0)).unwrap();
        for q in [KernelQuadrature::Midpoint, KernelQuadrature::CellIntegrated] {
            let k = kernel_matrix(&model, &grid, q);
            let d = dchi_kernel_matrix(&model, &grid, q);
            for a in 0..3 {
                for b in 0..3 {
                    for j in 0..16 {
                        for jp in 0..16 {
                            let (x, y) = (k.entry(a, j, b, jp), k.entry(b, jp, a, j));
                            assert!((x - y).abs() < 1e-15 * x.abs().max(1.0));
                            let (x, y) = (d.entry(a, j, b, jp), d.entry(b, jp, a, j));
                            assert!((x + y).abs() < 1e-14);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn ising_kernel_is_zero() {
        let model = Model::ising(0.5).unwrap();
        let grid = RapidityGrid::uniform(16, model.domain()).unwrap();
        let k = cell_kernel_matrix(&model, &grid);
        assert!(k.is_zero());
        assert!(k.to_dense().iter().all(|&x| x == 0.0));
    }
}
