use lossless::analysis::{check_constant_of_motion, orbit_sup_norm};
use lossless::dynamics::DynamicSpec;
use lossless::simulation::*;
use lossless::{GameSpec, MixedProfile};
use proptest::prelude::*;

fn rps_entropy() -> SystemSpec {
    let x = vec![vec![0.5, 0.25, 0.25], vec![0.6, 0.3, 0.1]];
    SystemSpec::homogeneous(GameSpec::rock_paper_scissors(), DynamicSpec::entropy(), &x).unwrap()
}

fn storage_drift(sys: &SystemSpec, dt: f64) -> f64 {
    let traj = simulate(sys, &IntegratorConfig::new(dt, 500.0)).unwrap();
    check_constant_of_motion(&traj, sys, &MixedProfile::uniform(&[3, 3]), 1.0)
        .unwrap()
        .max_abs_drift
}

#[test]
fn halving_dt_shrinks_storage_drift() {
    let sys = rps_entropy();
    let drifts: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| storage_drift(&sys, dt))
        .collect();
    for w in drifts.windows(2) {
        assert!(w[0] / w[1] >= 8.0, "drifts {drifts:?}");
    }
}

#[test]
fn reduced_coordinates_give_the_same_strategies() {
    let game = GameSpec::cyclic_matching_pennies();
    let x = vec![vec![0.9, 0.1], vec![0.88, 0.12], vec![0.4, 0.6]];
    for d in [
        DynamicSpec::entropy(),
        DynamicSpec::half_l2(),
        DynamicSpec::rd_ogd_mix(0.5).unwrap(),
    ] {
        let sys = SystemSpec::homogeneous(game.clone(), d, &x).unwrap();
        let cfg = IntegratorConfig::new(0.01, 10.0);
        let full = simulate(&sys, &cfg).unwrap();
        let reduced = simulate(&sys, &cfg.with_coordinates(Coordinates::Reduced)).unwrap();
        assert_eq!(full.len(), reduced.len());
        for k in 0..full.len() {
            for (a, b) in full.x(k).iter().zip(reduced.x(k)) {
                assert!((a - b).abs() <= 1e-9, "t={} {a} {b}", full.times()[k]);
            }
        }
    }
}

#[test]
fn runs_are_bit_identical() {
    let sys = rps_entropy();
    let cfg = IntegratorConfig::new(0.01, 20.0);
    let a = simulate(&sys, &cfg).unwrap();
    let b = simulate(&sys, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv_string(), b.to_csv_string());
}

#[test]
fn orbits_stay_bounded_under_refinement() {
    let x = vec![vec![0.5, 0.25, 0.25], vec![0.6, 0.3, 0.1]];
    for d in [
        DynamicSpec::entropy(),
        DynamicSpec::rd_ogd_mix(0.5).unwrap(),
    ] {
        let sys = SystemSpec::homogeneous(GameSpec::rock_paper_scissors(), d, &x).unwrap();
        let coarse =
            orbit_sup_norm(&simulate(&sys, &IntegratorConfig::new(0.01, 500.0)).unwrap()).unwrap();
        let fine =
            orbit_sup_norm(&simulate(&sys, &IntegratorConfig::new(0.005, 500.0)).unwrap()).unwrap();
        assert!(coarse.is_finite());
        assert!((coarse - fine).abs() <= 0.01 * fine, "{coarse} vs {fine}");
    }
}

#[test]
fn samples_stay_on_the_simplex() {
    let sys = rps_entropy();
    let traj = simulate(&sys, &IntegratorConfig::new(0.01, 100.0)).unwrap();
    let w = traj.times().windows(2).all(|w| w[0] < w[1]);
    assert!(w);
    for k in 0..traj.len() {
        for i in 0..2 {
            let s: f64 = traj.x_agent(k, i).iter().sum();
            assert!((s - 1.0).abs() <= 1e-8);
        }
    }
}

proptest! {
    #[test]
    fn embedding_preserves_convert(q in prop::collection::vec(-20.0f64..20.0, 4)) {
        for d in [DynamicSpec::entropy(), DynamicSpec::half_l2(), DynamicSpec::rd_ogd_mix(0.3).unwrap()] {
            let a = d.convert(&q).unwrap();
            let b = d.convert(&embed_coordinates(&reduce_coordinates(&q))).unwrap();
            for (u, v) in a.iter().zip(&b) {
                prop_assert!((u - v).abs() <= 1e-10);
            }
        }
    }
}
