use lossless::analysis::*;
use lossless::dynamics::{DynamicSpec, Shift};
use lossless::simulation::*;
use lossless::{GameSpec, MixedProfile, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_signal(rng: &mut ChaCha8Rng, n: usize, pieces: usize, width: f64) -> PiecewiseConstant {
    let values = (0..pieces)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    PiecewiseConstant::new(width, values)
}

fn rps_start() -> Vec<Vec<f64>> {
    vec![vec![0.5, 0.25, 0.25], vec![0.6, 0.3, 0.1]]
}

#[test]
fn entropy_energy_balance_on_random_signal() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sig = random_signal(&mut rng, 3, 10, 1.0);
    let d = DynamicSpec::entropy();
    let traj = simulate_open_loop(
        &d,
        &sig,
        &[0.2, -0.1, 0.0],
        &IntegratorConfig::new(0.01, 10.0),
    )
    .unwrap();
    let rep = check_energy_balance(&traj, 0, &d, &Shift::unit(3, 0), 1e-6).unwrap();
    assert_eq!(
        rep.verdict,
        EnergyVerdict::Lossless,
        "max |r| = {}",
        rep.max_abs
    );
    assert_eq!(rep.residuals.len(), traj.len());
}

#[test]
fn zero_signal_has_zero_residual() {
    let d = DynamicSpec::rd_ogd_mix(0.3).unwrap();
    let traj = simulate_open_loop(
        &d,
        &ConstantSignal(vec![0.0; 3]),
        &[0.1, 0.5, 0.0],
        &IntegratorConfig::new(0.1, 5.0),
    )
    .unwrap();
    let rep = check_energy_balance(&traj, 0, &d, &Shift::Zero, 0.0).unwrap();
    assert!(rep.residuals.iter().all(|r| *r == 0.0));
}

#[test]
fn corrupted_storage_is_flagged() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sig = random_signal(&mut rng, 2, 10, 1.0);
    let d = DynamicSpec::entropy();
    let traj =
        simulate_open_loop(&d, &sig, &[0.0, 0.0], &IntegratorConfig::new(0.01, 10.0)).unwrap();
    let shift = Shift::unit(2, 1);
    let corrupted = |q: &[f64]| -> Result<f64> {
        let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(d.storage_value(q, &shift)? + 0.1 * norm)
    };
    let rep = check_energy_balance_with(&traj, 0, corrupted, shift.as_slice(), 1e-6).unwrap();
    assert_eq!(rep.verdict, EnergyVerdict::Violated);
}

#[test]
fn constant_of_motion_at_equilibrium_start() {
    let game = GameSpec::rock_paper_scissors();
    let ne = MixedProfile::uniform(&[3, 3]);
    let sys = SystemSpec::homogeneous(game, DynamicSpec::entropy(), ne.agents()).unwrap();
    let traj = simulate(&sys, &IntegratorConfig::new(0.01, 20.0)).unwrap();
    let rep = check_constant_of_motion(&traj, &sys, &ne, 1e-12).unwrap();
    assert!(rep.conserved);
    // each storage sits at its minimum, zero, at the equilibrium
    assert!(rep.series.iter().all(|h| h.abs() < 1e-14));
}

#[test]
fn constant_of_motion_checks_hypotheses() {
    let game = GameSpec::rock_paper_scissors();
    let sys = SystemSpec::homogeneous(game, DynamicSpec::entropy(), &rps_start()).unwrap();
    let traj = simulate(&sys, &IntegratorConfig::new(0.1, 1.0)).unwrap();
    let not_ne = MixedProfile::new(rps_start()).unwrap();
    assert!(check_constant_of_motion(&traj, &sys, &not_ne, 1e-3).is_err());
}

#[test]
fn analytic_regret_case() {
    let d = DynamicSpec::entropy();
    let traj = simulate_open_loop(
        &d,
        &ConstantSignal(vec![1.0, 0.0]),
        &[0.0, 0.0],
        &IntegratorConfig::new(0.01, 5.0),
    )
    .unwrap();
    let rep = regret_report(&traj, &[&d], 1e-4).unwrap();
    let last = traj.len() - 1;
    let exact = 2f64.ln() - (1.0 + (-5f64).exp()).ln();
    assert!((rep.agents[0].series[last] - exact).abs() < 1e-9);
    assert!((rep.agents[0].bound - 2f64.ln()).abs() < 1e-12);
    assert!(rep.within_bound);
}

#[test]
fn zero_signal_has_zero_regret() {
    let d = DynamicSpec::half_l2();
    let traj = simulate_open_loop(
        &d,
        &ConstantSignal(vec![0.0; 3]),
        &[0.0; 3],
        &IntegratorConfig::new(0.1, 3.0),
    )
    .unwrap();
    let rep = regret_report(&traj, &[&d], 0.0).unwrap();
    assert!(rep.agents[0].series.iter().all(|r| *r == 0.0));
}

#[test]
fn regret_identity_on_half_l2() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sig = random_signal(&mut rng, 3, 20, 0.5);
    let d = DynamicSpec::half_l2();
    let traj = simulate_open_loop(
        &d,
        &sig,
        &[0.3, 0.0, -0.2],
        &IntegratorConfig::new(0.01, 10.0),
    )
    .unwrap();
    assert!(regret_identity_residual(&traj, 0, &d).unwrap() < 1e-9);
}

#[test]
fn stationary_trajectory_is_degenerate() {
    let game = GameSpec::cyclic_matching_pennies();
    let ne = MixedProfile::uniform(&[2, 2, 2]);
    let sys = SystemSpec::homogeneous(game, DynamicSpec::half_l2(), ne.agents()).unwrap();
    let traj = simulate(&sys, &IntegratorConfig::new(0.01, 10.0)).unwrap();
    let rep = recurrence_report(&traj, 1e-2).unwrap();
    assert!(rep.degenerate);
    assert_eq!(rep.distances[0], 0.0);
    assert!(rep.distances.iter().all(|d| *d == 0.0));
    // a flat series has no strict minima
    assert_eq!(rep.returns(), 0);
}

#[test]
fn recurrence_minima_are_strict_and_after_dead_time() {
    let game = GameSpec::rock_paper_scissors();
    let sys = SystemSpec::homogeneous(game, DynamicSpec::half_l2(), &rps_start()).unwrap();
    let traj = simulate(&sys, &IntegratorConfig::new(0.01, 60.0)).unwrap();
    let rep = recurrence_report(&traj, 1e-3).unwrap();
    assert!(rep.returns() >= 2);
    let times = traj.times();
    for e in &rep.events {
        let k = times.iter().position(|t| *t == e.t).unwrap();
        assert!(e.t >= DEAD_TIME_FOR_TEST);
        assert!(rep.distances[k - 1] > e.distance && rep.distances[k + 1] > e.distance);
    }
}

const DEAD_TIME_FOR_TEST: f64 = lossless::analysis::recurrence::DEAD_TIME;

#[test]
fn divergence_vanishes_for_graphical_games() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let game = GameSpec::cyclic_matching_pennies();
    let sys = SystemSpec::homogeneous(
        game,
        DynamicSpec::rd_ogd_mix(0.5).unwrap(),
        &vec![vec![0.5, 0.5]; 3],
    )
    .unwrap();
    for _ in 0..20 {
        let q: Vec<f64> = (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect();
        assert!(divergence_residual(&sys, &q, 1e-5).unwrap() < 1e-8);
    }
}

/// One agent whose payoff depends on its own state: `p = −x(q)`.
struct SelfLoop;

impl VectorField for SelfLoop {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, _: Stage, z: &[f64], dz: &mut [f64]) -> Result<()> {
        let x = DynamicSpec::entropy().convert(z)?;
        dz[0] = -x[0];
        dz[1] = -x[1];
        Ok(())
    }
}

#[test]
fn self_payoff_has_divergence() {
    // ∂x_j/∂q_j = x_j(1 − x_j), so the divergence is −Σ x_j(1 − x_j) = −0.5 at the origin
    let div = divergence_of(&SelfLoop, &[0.0, 0.0], 1e-5).unwrap();
    assert!((div + 0.5).abs() < 1e-8, "{div}");
}

#[test]
fn volume_protocol_basics() {
    let game = GameSpec::rock_paper_scissors();
    let sys = SystemSpec::homogeneous(game, DynamicSpec::entropy(), &rps_start()).unwrap();
    let center = vec![0.3, -0.2, 0.1, 0.4];
    let cloud = simplex_cloud(&center, 1e-3);
    let mut cfg = IntegratorConfig::new(0.01, 5.0);
    let rep = volume_drift(&sys, &cloud, &cfg).unwrap();
    assert!(rep.drift() < 1e-2);
    cfg.horizon = 0.0;
    assert_eq!(volume_drift(&sys, &cloud, &cfg).unwrap().drift(), 0.0);
    let flat = vec![center.clone(); 5];
    assert!(volume_drift(&sys, &flat, &IntegratorConfig::new(0.01, 1.0)).is_err());
}

#[test]
fn damping_contracts_volume() {
    let game = GameSpec::rock_paper_scissors();
    let sys = SystemSpec::homogeneous(game, DynamicSpec::entropy(), &rps_start()).unwrap();
    let cloud = simplex_cloud(&[0.3, -0.2, 0.1, 0.4], 1e-3);
    let rep = volume_drift_damped(&sys, &cloud, &IntegratorConfig::new(0.01, 5.0), 0.1).unwrap();
    // exact contraction factor e^{−γ·dim·T}
    let expected = (-0.1f64 * 4.0 * 5.0).exp() - 1.0;
    assert!(
        (rep.relative_change - expected).abs() < 1e-2,
        "{}",
        rep.relative_change
    );
}

#[test]
fn game_supply_vanishes_along_trajectories() {
    let game = GameSpec::rock_paper_scissors();
    let sys = SystemSpec::homogeneous(game, DynamicSpec::half_l2(), &rps_start()).unwrap();
    let traj = simulate(&sys, &IntegratorConfig::new(0.01, 50.0)).unwrap();
    assert!(game_supply_residual(&traj, &MixedProfile::uniform(&[3, 3])).unwrap() < 1e-6);
}

#[test]
fn orbit_norm_is_stable_under_refinement() {
    let game = GameSpec::cyclic_matching_pennies();
    let x = vec![vec![0.9, 0.1], vec![0.88, 0.12], vec![0.4, 0.6]];
    let sys = SystemSpec::homogeneous(game, DynamicSpec::rd_ogd_mix(0.5).unwrap(), &x).unwrap();
    let a = orbit_sup_norm(&simulate(&sys, &IntegratorConfig::new(0.02, 100.0)).unwrap()).unwrap();
    let b = orbit_sup_norm(&simulate(&sys, &IntegratorConfig::new(0.01, 100.0)).unwrap()).unwrap();
    assert!(a.is_finite() && (a - b).abs() / b < 1e-2);
}
