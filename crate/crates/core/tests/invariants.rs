use std::f64::consts::PI;

use otto_core::correlators::CorrelatorBundle;
use otto_core::cycle::infinitesimal_work_gap;
use otto_core::strokes::{ghd_stroke, GhdOptions, StrokePath};
use otto_core::{
    gge_distance, interpolate_filling, DiscreteModel, Field, FillingState, Model, Numerics, RapidityGrid,
    StringSpectrum,
};
use proptest::prelude::*;

fn nonzero_beta() -> impl Strategy<Value = f64> {
    prop_oneof![-3.0..-0.1f64, 0.1..3.0f64]
}

fn filling(values: Vec<f64>) -> FillingState {
    let n = values.len();
    let grid = RapidityGrid::uniform(n, (-PI / 2.0, PI / 2.0)).unwrap();
    FillingState::new(grid, StringSpectrum::single(), Field::from_rows(vec![values]).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interpolation_stays_in_unit_interval(values in prop::collection::vec(0.0..=1.0f64, 8..40), x in -10.0..10.0f64) {
        let st = filling(values);
        let v = interpolate_filling(&st, 1, x).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn interpolation_is_exact_at_nodes_and_periodic(values in prop::collection::vec(0.0..=1.0f64, 8..40), k in 0usize..8) {
        let st = filling(values.clone());
        let mid = st.grid().midpoints().to_vec();
        let j = k % mid.len();
        prop_assert_eq!(interpolate_filling(&st, 1, mid[j]).unwrap(), values[j]);
        let x = mid[j] + 0.3 * st.grid().spacing();
        let a = interpolate_filling(&st, 1, x).unwrap();
        let b = interpolate_filling(&st, 1, x + PI).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn filling_json_round_trip(values in prop::collection::vec(0.0..=1.0f64, 8..24)) {
        let st = filling(values);
        let text = serde_json::to_string(&st).unwrap();
        let back: FillingState = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, st);
    }

    #[test]
    fn stroke_schedule_hits_endpoints(a in -5.0..5.0f64, len in 0.01..3.0f64, n in 1usize..500) {
        let p = StrokePath::new(a, a + len, n).unwrap();
        prop_assert_eq!(p.chi(0), a);
        prop_assert_eq!(p.chi(n), a + len);
        let s = p.schedule();
        prop_assert_eq!(s.len(), n + 1);
        prop_assert!(s.windows(2).all(|w| w[1] > w[0]));
        prop_assert_eq!(p.reversed().reversed(), p);
    }

    #[test]
    fn ising_thermal_bounds(beta in -20.0..20.0f64, h in 0.05..3.0f64) {
        let dm = DiscreteModel::new(Model::ising(h).unwrap(), Numerics::with_cells(128)).unwrap();
        let p = dm.thermal_point(beta, 0.0, None).unwrap();
        prop_assert!(p.entropy >= -1e-15 && p.entropy <= 2f64.ln() + 1e-13);
        prop_assert!(p.filling.values().as_slice().iter().all(|t| (0.0..=1.0).contains(t)));
        let full = dm.thermal_point(-1e9, 0.0, None).unwrap().energy;
        prop_assert!(p.energy >= 0.0 && p.energy <= full + 1e-12);
        // Higher |β| on the same side orders energies.
        if beta > 0.0 {
            prop_assert!(p.energy <= dm.thermal_point(0.0, 0.0, None).unwrap().energy + 1e-12);
        }
    }

    #[test]
    fn distance_is_zero_only_on_itself(beta in nonzero_beta(), h in 0.2..2.0f64, db in 0.05..0.5f64) {
        let dm = DiscreteModel::new(Model::ising(h).unwrap(), Numerics::with_cells(64)).unwrap();
        let a = dm.thermal_point(beta, 0.0, None).unwrap();
        let b = dm.thermal_point(beta + db, 0.0, None).unwrap();
        prop_assert_eq!(gge_distance(&a.density, &a.density).unwrap().value, 0.0);
        prop_assert!(gge_distance(&a.density, &b.density).unwrap().value > 0.0);
    }

    #[test]
    fn ising_work_gap_sign(beta in nonzero_beta(), h in 0.05..3.0f64) {
        let dm = DiscreteModel::new(Model::ising(h).unwrap(), Numerics::with_cells(200)).unwrap();
        let p = dm.thermal_point(beta, 0.0, None).unwrap();
        let b = CorrelatorBundle::new(&dm, &p.filling).unwrap();
        prop_assert!(b.projection_gap().unwrap() >= -1e-10);
        prop_assert!(infinitesimal_work_gap(&dm, &p, 0.01).unwrap() * beta <= 0.0);
    }

    #[test]
    fn ising_prethermal_filling_frozen(beta in nonzero_beta(), h0 in 0.1..2.5f64, dh in -1.0..1.0f64) {
        let h1 = (h0 + dh).max(0.05);
        prop_assume!((h1 - h0).abs() > 1e-3);
        let dm = DiscreteModel::new(Model::ising(h0).unwrap(), Numerics::with_cells(64)).unwrap();
        let p = dm.thermal_point(beta, 0.0, None).unwrap();
        let t = ghd_stroke(&dm, &p.filling, &StrokePath::new(h0, h1, 7).unwrap(), &GhdOptions::default()).unwrap();
        let d = t.end_filling.values().zip_map(p.filling.values(), |a, b| a - b).max_abs();
        prop_assert!(d <= 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn xxz_work_gap_sign(beta in nonzero_beta(), delta in 1.2..4.0f64, flip in any::<bool>(), mu in 0.0..3.0f64) {
        let delta = if flip { -delta } else { delta };
        let dm = DiscreteModel::new(Model::xxz(-1.0, delta, 4).unwrap(), Numerics::with_cells(64)).unwrap();
        let p = dm.thermal_point(beta, mu, None).unwrap();
        let b = CorrelatorBundle::new(&dm, &p.filling).unwrap();
        prop_assert!(b.projection_gap().unwrap() >= -1e-10);
        prop_assert!(infinitesimal_work_gap(&dm, &p, 0.01).unwrap() * beta <= 0.0);
        let m = p.magnetization.unwrap();
        prop_assert!((-1.0..=1.0).contains(&m));
    }
}
