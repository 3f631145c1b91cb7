mod common;

use std::f64::consts::PI;

use common::{ising_e, ising_reference, observed_orders};
use otto_core::strokes::{ghd_stroke, thermal_stroke, work_along, GhdOptions, StrokePath};
use otto_core::{DiscreteModel, Model, Numerics};

fn xxz(delta: f64, ns: usize, cells: usize) -> DiscreteModel {
    DiscreteModel::new(Model::xxz(-1.0, delta, ns).unwrap(), Numerics::with_cells(cells)).unwrap()
}

/// Inverse temperature with the given entropy at field `h`, by bisection on
/// the quadrature oracle. `s(β)` decreases in `|β|`, so the sign is fixed.
fn isentropic_beta(s: f64, h: f64, sign: f64) -> f64 {
    let (mut lo, mut hi) = (1e-9, 50.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ising_reference(sign * mid, h).entropy > s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    sign * 0.5 * (lo + hi)
}

#[test]
fn ising_thermal_stroke_follows_isentrope() {
    for &(beta, h0, h1) in &[(1.2, 0.5, 1.6), (-0.9, 2.0, 0.7)] {
        let dm = DiscreteModel::new(Model::ising(h0).unwrap(), Numerics::default()).unwrap();
        let start = dm.thermal_point(beta, 0.0, None).unwrap();
        let t = thermal_stroke(&dm, &start, &StrokePath::new(h0, h1, 100).unwrap()).unwrap();
        assert!(t.entropy_defect() < 1e-8, "{}", t.entropy_defect());
        let end = t.end_point.as_ref().unwrap();
        let want = isentropic_beta(ising_reference(beta, h0).entropy, h1, beta.signum());
        assert!((end.beta - want).abs() < 1e-8 * want.abs(), "{} vs {want}", end.beta);
        let u1 = ising_reference(want, h1).energy;
        assert!((t.end_energy() - u1).abs() < 1e-9);
    }
}

#[test]
fn xxz_thermal_stroke_conserves_entropy_and_magnetization() {
    let dm = xxz(2.0, 6, 120);
    let start = dm.thermal_state(0.7, 0.45).unwrap();
    let t = thermal_stroke(&dm, &start, &StrokePath::new(2.0, 2.6, 40).unwrap()).unwrap();
    assert!(t.entropy_defect() < 1e-9, "{}", t.entropy_defect());
    for r in &t.records {
        assert!((r.magnetization.unwrap() - 0.45).abs() < 1e-9);
    }
    let w = work_along(&t);
    assert!((w - t.work_integral()).abs() < 1e-4 * w.abs().max(1e-3));
}

#[test]
fn ising_prethermal_work_uses_frozen_modes() {
    let (beta, h0, h1) = (-0.8, 0.6, 1.9);
    let dm = DiscreteModel::new(Model::ising(h0).unwrap(), Numerics::default()).unwrap();
    let start = dm.thermal_point(beta, 0.0, None).unwrap();
    let t = ghd_stroke(
        &dm,
        &start.filling,
        &StrokePath::new(h0, h1, 50).unwrap(),
        &GhdOptions::default(),
    )
    .unwrap();
    assert_eq!(t.end_filling, start.filling);
    let frozen = |l: f64| {
        let n = 1.0 / (1.0 + (beta * ising_e(l, h0)).exp());
        ising_e(l, h1) * n / (2.0 * PI)
    };
    let u1 = common::integrate(frozen, -PI, 0.0, 1e-14) + common::integrate(frozen, 0.0, PI, 1e-14);
    let u0 = ising_reference(beta, h0).energy;
    assert!((work_along(&t) - (u0 - u1)).abs() < 1e-10);
    assert!(t.entropy_defect() < 1e-14);
}

#[test]
fn ghd_entropy_defect_is_second_order() {
    let dm = xxz(1.5, 6, 400);
    let start = dm.thermal_state(-4.0, 0.9).unwrap();
    let defects: Vec<f64> = [5, 10, 20]
        .iter()
        .map(|&n| {
            let t = ghd_stroke(
                &dm,
                &start.filling,
                &StrokePath::new(1.5, 2.0, n).unwrap(),
                &GhdOptions::default(),
            )
            .unwrap();
            t.entropy_change().abs()
        })
        .collect();
    for order in observed_orders(&defects) {
        assert!(order > 1.8, "{defects:?}");
    }
}

#[test]
fn ghd_conserves_particles_and_reverses() {
    let dm = xxz(2.0, 6, 400);
    let start = dm.thermal_state(1.0, 0.45).unwrap();
    let path = StrokePath::new(2.0, 2.5, 40).unwrap();
    let fwd = ghd_stroke(&dm, &start.filling, &path, &GhdOptions::default()).unwrap();
    assert_eq!(fwd.clamp_events, 0);
    let n0 = &fwd.records[0].particles;
    for r in &fwd.records {
        for (a, b) in r.particles.iter().zip(n0) {
            assert!((a - b).abs() < 1e-6 * b.abs().max(1e-3), "{a} vs {b}");
        }
    }
    let dm_end = dm.at_control(2.5).unwrap();
    let back = ghd_stroke(&dm_end, &fwd.end_filling, &path.reversed(), &GhdOptions::default()).unwrap();
    let err = back
        .end_filling
        .values()
        .zip_map(start.filling.values(), |a, b| a - b)
        .max_abs();
    assert!(err < 1e-5, "{err}");
    assert!((work_along(&fwd) + work_along(&back)).abs() < 1e-7);
}

#[test]
fn ghd_work_matches_force_integral() {
    let dm = xxz(-1.5, 6, 200);
    let start = dm.thermal_state(0.8, 0.3).unwrap();
    let coarse = ghd_stroke(
        &dm,
        &start.filling,
        &StrokePath::new(-1.5, -2.2, 40).unwrap(),
        &GhdOptions::default(),
    )
    .unwrap();
    let fine = ghd_stroke(
        &dm,
        &start.filling,
        &StrokePath::new(-1.5, -2.2, 80).unwrap(),
        &GhdOptions::default(),
    )
    .unwrap();
    let gap = |t: &otto_core::StrokeTrajectory| (work_along(t) - t.work_integral()).abs();
    assert!(
        gap(&fine) < 0.3 * gap(&coarse) + 1e-12,
        "{} {}",
        gap(&coarse),
        gap(&fine)
    );
    assert!(gap(&fine) < 1e-4 * work_along(&fine).abs());
}
