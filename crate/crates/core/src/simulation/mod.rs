//! Integration of dynamical game systems and single learning operators.

pub mod integrator;
pub mod signal;
pub mod system;
pub mod trajectory;

pub use integrator::{
    integrate_to_end, Coordinates, IntegratorConfig, Method, Rk4, Stage, VectorField,
};
pub use signal::{ConstantSignal, FnSignal, PayoffSignal, PiecewiseConstant};
pub use system::{
    embed_coordinates, reduce_coordinates, Agent, AgentInit, AgentSpec, ClosedLoopField,
    SystemSpec, BOUNDARY_GUARD,
};
pub use trajectory::Trajectory;

use crate::dynamics::{DynamicSpec, Shift};
use crate::error::{Error, Result};

/// Per-sample quantities derived from an integrator state.
pub(crate) struct Observation {
    pub state: Vec<f64>,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub storage: Vec<f64>,
}

/// A vector field whose leading `state_dim` coordinates are agent states,
/// followed by `∫p` for every action and `∫⟨x, p⟩` for every agent.
pub(crate) trait Plant: VectorField {
    fn layout(&self) -> (Vec<usize>, Vec<bool>);
    fn observe(&self, stage: Stage, z: &[f64], obs: &mut Observation) -> Result<()>;
    fn interior(&self, z: &[f64]) -> bool;
    fn state_dim(&self) -> usize;
}

/// Integrates the closed loop `q̇_i = p_i(x̂)`, `x_i = f_i(q_i)` (escort agents
/// evolve `x_i` directly) with RK4 on a uniform grid.
///
/// Payoff integrals are carried as extra ODE coordinates, so they share the
/// integrator's accuracy. An escort agent crossing the boundary guard stops
/// the run; the trajectory keeps the samples before the crossing.
pub fn simulate(system: &SystemSpec, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let field = ClosedLoopField::new(system, cfg.coordinates, true);
    let z0 = system.initial_state(cfg.coordinates);
    run(&field, z0, cfg)
}

/// Integrates a single q-state learning operator driven by an external payoff signal.
pub fn simulate_open_loop(
    dynamic: &DynamicSpec,
    signal: &dyn PayoffSignal,
    q0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if dynamic.contains_escort() {
        return Err(Error::InvalidDynamic(
            "open-loop runs need a q-state dynamic".into(),
        ));
    }
    let n = q0.len();
    dynamic.validate_for(n)?;
    if signal.len() != n {
        return Err(Error::DimensionMismatch {
            agent: 0,
            expected: n,
            found: signal.len(),
        });
    }
    if q0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "initial cumulative payoffs",
        });
    }
    let field = OpenLoopField { dynamic, signal, n };
    run(&field, q0.to_vec(), cfg)
}

fn run<P: Plant>(plant: &P, mut z: Vec<f64>, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let (counts, escort) = plant.layout();
    let mut traj = Trajectory::new(counts, escort, cfg.dt, cfg.horizon);
    let total = traj.total_actions();
    let agents = traj.num_agents();
    let sd = plant.state_dim();
    z.resize(plant.dim(), 0.0);
    let mut obs = Observation {
        state: vec![0.0; total],
        x: vec![0.0; total],
        p: vec![0.0; total],
        storage: vec![0.0; agents],
    };
    let mut record = |traj: &mut Trajectory, stage: Stage, z: &[f64]| -> Result<()> {
        plant.observe(stage, z, &mut obs)?;
        traj.push(
            stage.time(),
            &obs.state,
            &obs.x,
            &obs.p,
            &obs.storage,
            &z[sd..sd + total],
            &z[sd + total..sd + total + agents],
        );
        Ok(())
    };
    record(&mut traj, Stage::at(0.0), &z)?;
    let mut rk = Rk4::new(z.len());
    let steps = cfg.num_steps();
    for k in 0..steps {
        let (t0, t1) = cfg.step_bounds(k, steps);
        match rk.step_located(plant, t0, t1 - t0, &mut z) {
            Ok(_) => {}
            Err(Error::BoundaryState { .. }) => {
                traj.boundary_hit = true;
                break;
            }
            Err(e) => return Err(e),
        }
        if !plant.interior(&z) {
            traj.boundary_hit = true;
            break;
        }
        if (k + 1) % cfg.record_stride == 0 || k + 1 == steps {
            // the sample at t1 reports the right limit of piecewise signals
            record(&mut traj, Stage::at(t1), &z)?;
        }
    }
    Ok(traj)
}

struct OpenLoopField<'a> {
    dynamic: &'a DynamicSpec,
    signal: &'a dyn PayoffSignal,
    n: usize,
}

impl VectorField for OpenLoopField<'_> {
    fn dim(&self) -> usize {
        2 * self.n + 1
    }

    fn eval(&self, stage: Stage, z: &[f64], dz: &mut [f64]) -> Result<()> {
        let n = self.n;
        let x = self.dynamic.convert(&z[..n])?;
        self.signal.value_at_stage(stage, &mut dz[..n]);
        let (head, tail) = dz.split_at_mut(n);
        tail[..n].copy_from_slice(head);
        tail[n] = x.iter().zip(head.iter()).map(|(a, b)| a * b).sum();
        Ok(())
    }

    fn has_regimes(&self) -> bool {
        self.dynamic.has_kinks()
    }

    fn regime(&self, z: &[f64], out: &mut Vec<u8>) -> Result<()> {
        self.dynamic.active_set(&z[..self.n], out)
    }
}

impl Plant for OpenLoopField<'_> {
    fn layout(&self) -> (Vec<usize>, Vec<bool>) {
        (vec![self.n], vec![false])
    }

    fn observe(&self, stage: Stage, z: &[f64], obs: &mut Observation) -> Result<()> {
        let q = &z[..self.n];
        obs.state.copy_from_slice(q);
        obs.x.copy_from_slice(&self.dynamic.convert(q)?);
        self.signal.value_at_stage(stage, &mut obs.p);
        obs.storage[0] = self.dynamic.storage_value(q, &Shift::Zero)?;
        Ok(())
    }

    fn interior(&self, _z: &[f64]) -> bool {
        true
    }

    fn state_dim(&self) -> usize {
        self.n
    }
}
