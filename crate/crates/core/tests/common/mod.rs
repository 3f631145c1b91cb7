//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        kronrod += KRONROD_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let (v, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return v;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss–Kronrod (7, 15) quadrature to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    adapt(&f, a, b, tol, 40)
}

pub fn ising_e(l: f64, h: f64) -> f64 {
    let (s, c) = l.sin_cos();
    2.0 * ((c - h).powi(2) + s * s).sqrt()
}

pub fn ising_dh_e(l: f64, h: f64) -> f64 {
    4.0 * (h - l.cos()) / ising_e(l, h)
}

fn occupation(beta: f64, e: f64) -> f64 {
    let x = beta * e;
    if x > 0.0 {
        let t = (-x).exp();
        t / (1.0 + t)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Fermi–Dirac thermodynamics of the transverse-field Ising chain, per site,
/// measured from the quasiparticle vacuum.
#[derive(Debug, Clone, Copy)]
pub struct IsingReference {
    pub energy: f64,
    pub entropy: f64,
    /// `⟨H²⟩_c / L`.
    pub variance: f64,
    /// `⟨H ∂_h H⟩_c / L`.
    pub response: f64,
    /// `⟨∂_h H⟩ / L`.
    pub dfield_energy: f64,
}

pub fn ising_reference(beta: f64, h: f64) -> IsingReference {
    let tol = 1e-14;
    let over = |g: &dyn Fn(f64) -> f64| {
        // Split at the possible gap-closing point.
        (integrate(g, -PI, 0.0, tol) + integrate(g, 0.0, PI, tol)) / (2.0 * PI)
    };
    let n = |l: f64| occupation(beta, ising_e(l, h));
    IsingReference {
        energy: over(&|l| ising_e(l, h) * n(l)),
        entropy: over(&|l| {
            let t = n(l);
            let mut s = 0.0;
            if t > 0.0 {
                s -= t * t.ln();
            }
            if t < 1.0 {
                s -= (1.0 - t) * (1.0 - t).ln();
            }
            s
        }),
        variance: over(&|l| {
            let t = n(l);
            ising_e(l, h).powi(2) * t * (1.0 - t)
        }),
        response: over(&|l| {
            let t = n(l);
            ising_e(l, h) * ising_dh_e(l, h) * t * (1.0 - t)
        }),
        dfield_energy: over(&|l| ising_dh_e(l, h) * n(l)),
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Order of convergence from errors at successively halved steps.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
