//! Quick oracle checks runnable from the binary.

use std::f64::consts::PI;

use otto_core::correlators::CorrelatorBundle;
use otto_core::cycle::infinitesimal_work_gap;
use otto_core::models::ising_dispersion;
use otto_core::strokes::{ghd_stroke, thermal_stroke, GhdOptions, StrokePath};
use otto_core::{ChargeId, DiscreteModel, Model, Numerics};

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(name: &'static str, run: impl FnOnce() -> Result<(bool, String), otto_core::Error>) -> Check {
    match run() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Run every check, print one line each, and report whether all passed.
pub fn run() -> bool {
    let checks = vec![
        check("ising infinite-temperature correlators", || {
            let h = 0.8;
            let dm = DiscreteModel::new(Model::ising(h)?, Numerics::with_cells(256))?;
            let p = dm.thermal_point(0.0, 0.0, None)?;
            let b = CorrelatorBundle::new(&dm, &p.filling)?;
            let c = b.covariance(ChargeId::Energy, ChargeId::Energy)?;
            let a = b.susceptibility(ChargeId::Energy, ChargeId::Energy)?;
            let err = (c - 1.0 - h * h).abs().max((a - h).abs());
            Ok((err < 1e-10, format!("max error {err:e}")))
        }),
        check("ising energy against quadrature", || {
            let (h, beta) = (0.8, -0.7);
            let dm = DiscreteModel::new(Model::ising(h)?, Numerics::default())?;
            let p = dm.thermal_point(beta, 0.0, None)?;
            let f = |l: f64| {
                let e = ising_dispersion(l, h);
                e / (2.0 * PI) / (1.0 + (beta * e).exp())
            };
            let exact = simpson(f, -PI, PI, 4000);
            let rel = (p.energy - exact).abs() / exact.abs();
            Ok((rel < 1e-8, format!("relative error {rel:e}")))
        }),
        check("xxz covariance against finite difference", || {
            let dm = DiscreteModel::new(Model::xxz(-1.0, 2.0, 4)?, Numerics::with_cells(64))?;
            let (beta, mu, d) = (1.0, 1.5, 1e-4);
            let p = dm.thermal_point(beta, mu, None)?;
            let b = CorrelatorBundle::new(&dm, &p.filling)?;
            let c = b.covariance(ChargeId::Energy, ChargeId::Energy)?;
            let up = dm.thermal_point(beta + d, mu, Some(&p.epsilon))?.energy;
            let dn = dm.thermal_point(beta - d, mu, Some(&p.epsilon))?.energy;
            let fd = -(up - dn) / (2.0 * d);
            let rel = (c - fd).abs() / c.abs();
            Ok((rel < 1e-5, format!("relative error {rel:e}")))
        }),
        check("ising prethermal stroke leaves filling unchanged", || {
            let dm = DiscreteModel::new(Model::ising(0.5)?, Numerics::with_cells(128))?;
            let p = dm.thermal_point(1.0, 0.0, None)?;
            let t = ghd_stroke(&dm, &p.filling, &StrokePath::new(0.5, 1.5, 50)?, &GhdOptions::default())?;
            let d = t
                .end_filling
                .values()
                .zip_map(p.filling.values(), |a, b| a - b)
                .max_abs();
            Ok((d == 0.0, format!("sup difference {d:e}")))
        }),
        check("ising thermal stroke conserves entropy", || {
            let dm = DiscreteModel::new(Model::ising(0.5)?, Numerics::with_cells(256))?;
            let p = dm.thermal_point(1.0, 0.0, None)?;
            let t = thermal_stroke(&dm, &p, &StrokePath::new(0.5, 0.6, 50)?)?;
            let ds = t.entropy_change().abs();
            Ok((ds < 1e-8, format!("entropy change {ds:e}")))
        }),
        check("work gap has the sign opposite to beta", || {
            let mut worst = f64::NEG_INFINITY;
            for model in [Model::ising(0.7)?, Model::xxz(-1.0, 1.8, 4)?] {
                let dm = DiscreteModel::new(model, Numerics::with_cells(64))?;
                for beta in [-2.0, -0.5, 0.5, 2.0] {
                    let p = dm.thermal_point(beta, 1.0, None)?;
                    worst = worst.max(beta * infinitesimal_work_gap(&dm, &p, 0.1)?);
                }
            }
            Ok((worst <= 0.0, format!("max beta * gap {worst:e}")))
        }),
    ];
    let mut all = true;
    for c in &checks {
        all &= c.passed;
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    all
}
