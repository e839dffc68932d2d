//! Dynamical game systems: a game in feedback with one learning operator per agent.

use crate::dynamics::{DynamicSpec, Escort, Shift};
use crate::error::{Error, Result};
use crate::game::{check_simplex, GameSpec, MixedProfile};

use super::integrator::{Coordinates, Stage, VectorField};
use super::{Observation, Plant};

/// Escort states closer than this to the boundary halt the integration.
pub const BOUNDARY_GUARD: f64 = 1e-12;

/// How an agent's initial condition is given.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentInit {
    /// Initial cumulative payoffs `q⁰` (q-state dynamics only).
    Cumulative(Vec<f64>),
    /// Initial mixed strategy `x(0)`; q-state dynamics invert their conversion map.
    Strategy(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct AgentSpec {
    pub dynamic: DynamicSpec,
    pub init: AgentInit,
}

impl AgentSpec {
    pub fn new(dynamic: DynamicSpec, init: AgentInit) -> Self {
        Self { dynamic, init }
    }
}

/// Resolved agent: either integrates cumulative payoffs or strategies directly.
#[derive(Debug, Clone)]
pub enum Agent {
    Cumulative { dynamic: DynamicSpec, q0: Vec<f64> },
    Escort { escort: Escort, x0: Vec<f64> },
}

impl Agent {
    pub fn is_escort(&self) -> bool {
        matches!(self, Agent::Escort { .. })
    }

    pub fn dynamic(&self) -> Option<&DynamicSpec> {
        match self {
            Agent::Cumulative { dynamic, .. } => Some(dynamic),
            Agent::Escort { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SystemSpec {
    game: GameSpec,
    agents: Vec<Agent>,
    reference: Option<MixedProfile>,
}

impl SystemSpec {
    pub fn new(game: GameSpec, agents: Vec<AgentSpec>) -> Result<Self> {
        if agents.len() != game.num_agents() {
            return Err(Error::AgentCountMismatch {
                expected: game.num_agents(),
                found: agents.len(),
            });
        }
        let mut resolved = Vec::with_capacity(agents.len());
        for (i, (spec, &n)) in agents.into_iter().zip(game.action_counts()).enumerate() {
            let tag = |e: Error| Error::InvalidSystem(format!("agent {i}: {e}"));
            spec.dynamic.validate_for(n).map_err(tag)?;
            let agent = match spec.dynamic {
                DynamicSpec::Escort(escort) => {
                    let AgentInit::Strategy(x0) = spec.init else {
                        return Err(tag(Error::InvalidDynamic(
                            "escort agents start from a strategy, not cumulative payoffs".into(),
                        )));
                    };
                    check_len(i, n, &x0)?;
                    check_simplex(i, &x0)?;
                    if let Some((coordinate, &value)) =
                        x0.iter().enumerate().find(|(_, v)| **v < BOUNDARY_GUARD)
                    {
                        return Err(tag(Error::BoundaryState { coordinate, value }));
                    }
                    Agent::Escort { escort, x0 }
                }
                dynamic => {
                    if dynamic.contains_escort() {
                        return Err(tag(Error::InvalidDynamic(
                            "escort leaves cannot be combined with q-state dynamics".into(),
                        )));
                    }
                    let q0 = match spec.init {
                        AgentInit::Cumulative(q0) => q0,
                        AgentInit::Strategy(x0) => {
                            check_len(i, n, &x0)?;
                            dynamic.initial_state_for(&x0).map_err(tag)?
                        }
                    };
                    check_len(i, n, &q0)?;
                    if q0.iter().any(|v| !v.is_finite()) {
                        return Err(tag(Error::NonFinite {
                            what: "initial cumulative payoffs",
                        }));
                    }
                    Agent::Cumulative { dynamic, q0 }
                }
            };
            resolved.push(agent);
        }
        Ok(Self {
            game,
            agents: resolved,
            reference: None,
        })
    }

    /// Shift used for the recorded storage series; zero shift when unset.
    pub fn with_reference(mut self, reference: MixedProfile) -> Result<Self> {
        for (i, (x, &n)) in reference
            .agents()
            .iter()
            .zip(self.game.action_counts())
            .enumerate()
        {
            check_len(i, n, x)?;
        }
        if reference.num_agents() != self.agents.len() {
            return Err(Error::AgentCountMismatch {
                expected: self.agents.len(),
                found: reference.num_agents(),
            });
        }
        self.reference = Some(reference);
        Ok(self)
    }

    pub fn reference(&self) -> Option<&MixedProfile> {
        self.reference.as_ref()
    }

    /// Every agent runs `dynamic` from the given strategies.
    pub fn homogeneous(game: GameSpec, dynamic: DynamicSpec, x0: &[Vec<f64>]) -> Result<Self> {
        let agents = x0
            .iter()
            .map(|x| AgentSpec::new(dynamic.clone(), AgentInit::Strategy(x.clone())))
            .collect();
        Self::new(game, agents)
    }

    pub fn game(&self) -> &GameSpec {
        &self.game
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn all_cumulative(&self) -> bool {
        self.agents.iter().all(|a| !a.is_escort())
    }

    /// Initial strategy profile `x̂(0)`.
    pub fn initial_profile(&self) -> Result<MixedProfile> {
        let mut blocks = Vec::with_capacity(self.agents.len());
        for a in &self.agents {
            blocks.push(match a {
                Agent::Cumulative { dynamic, q0 } => dynamic.convert(q0)?,
                Agent::Escort { x0, .. } => x0.clone(),
            });
        }
        MixedProfile::new(blocks)
    }

    /// State length of agent `i`'s block in the given coordinates.
    pub(crate) fn state_len(&self, i: usize, coords: Coordinates) -> usize {
        let n = self.game.action_counts()[i];
        match (&self.agents[i], coords) {
            (Agent::Cumulative { .. }, Coordinates::Reduced) => n - 1,
            _ => n,
        }
    }

    /// Initial state vector (without integral accumulators).
    pub fn initial_state(&self, coords: Coordinates) -> Vec<f64> {
        let mut z = Vec::new();
        for a in &self.agents {
            match (a, coords) {
                (Agent::Cumulative { q0, .. }, Coordinates::Reduced) => {
                    z.extend(reduce_coordinates(q0));
                }
                (Agent::Cumulative { q0, .. }, Coordinates::Full) => z.extend_from_slice(q0),
                (Agent::Escort { x0, .. }, _) => z.extend_from_slice(x0),
            }
        }
        z
    }

    /// The closed-loop vector field on the agents' states.
    pub fn field(&self, coords: Coordinates) -> ClosedLoopField<'_> {
        ClosedLoopField::new(self, coords, false)
    }
}

fn check_len(agent: usize, expected: usize, v: &[f64]) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            agent,
            expected,
            found: v.len(),
        })
    }
}

/// `q'_j = q_j − q_n` for `j < n`.
pub fn reduce_coordinates(q: &[f64]) -> Vec<f64> {
    let last = q.last().copied().unwrap_or(0.0);
    q[..q.len().saturating_sub(1)]
        .iter()
        .map(|v| v - last)
        .collect()
}

/// Inverse embedding `(q'_1, …, q'_{n−1}, 0)`.
pub fn embed_coordinates(q_reduced: &[f64]) -> Vec<f64> {
    let mut q = q_reduced.to_vec();
    q.push(0.0);
    q
}

/// Feedback interconnection of the game with the agents' learning operators.
///
/// State layout: each agent's block (`q`, `q'` or `x`) in agent order, then,
/// when integrals are enabled, per agent `∫p_j` for every action followed by
/// `∫⟨x, p⟩`.
pub struct ClosedLoopField<'a> {
    system: &'a SystemSpec,
    coords: Coordinates,
    integrals: bool,
    damping: f64,
    state_offsets: Vec<usize>,
    state_dim: usize,
}

impl<'a> ClosedLoopField<'a> {
    pub(crate) fn new(system: &'a SystemSpec, coords: Coordinates, integrals: bool) -> Self {
        let mut state_offsets = Vec::with_capacity(system.agents.len() + 1);
        let mut acc = 0;
        state_offsets.push(0);
        for i in 0..system.agents.len() {
            acc += system.state_len(i, coords);
            state_offsets.push(acc);
        }
        Self {
            system,
            coords,
            integrals,
            damping: 0.0,
            state_offsets,
            state_dim: acc,
        }
    }

    /// Adds `−γ z` to the agents' state derivatives; a dissipative control.
    pub fn with_damping(mut self, gamma: f64) -> Self {
        self.damping = gamma;
        self
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// Strategy profile (concatenated) at state `z`.
    pub fn strategies(&self, z: &[f64], x: &mut [f64]) -> Result<()> {
        let offsets = self.system.game.offsets();
        for (i, agent) in self.system.agents.iter().enumerate() {
            let block = &z[self.state_offsets[i]..self.state_offsets[i + 1]];
            let xi = &mut x[offsets[i]..offsets[i + 1]];
            match agent {
                Agent::Cumulative { dynamic, .. } => {
                    let out = match self.coords {
                        Coordinates::Full => dynamic.convert(block)?,
                        Coordinates::Reduced => dynamic.convert(&embed_coordinates(block))?,
                    };
                    xi.copy_from_slice(&out);
                }
                Agent::Escort { .. } => xi.copy_from_slice(block),
            }
        }
        Ok(())
    }
}

impl VectorField for ClosedLoopField<'_> {
    fn dim(&self) -> usize {
        if self.integrals {
            self.state_dim + self.system.game.total_actions() + self.system.agents.len()
        } else {
            self.state_dim
        }
    }

    fn eval(&self, _stage: Stage, z: &[f64], dz: &mut [f64]) -> Result<()> {
        let game = &self.system.game;
        let offsets = game.offsets();
        let total = game.total_actions();
        let mut x = vec![0.0; total];
        let mut p = vec![0.0; total];
        self.strategies(z, &mut x)?;
        game.payoff_flat(&x, &mut p);
        for (i, agent) in self.system.agents.iter().enumerate() {
            let (s0, s1) = (self.state_offsets[i], self.state_offsets[i + 1]);
            let (a0, a1) = (offsets[i], offsets[i + 1]);
            let pi = &p[a0..a1];
            let out = &mut dz[s0..s1];
            match (agent, self.coords) {
                (Agent::Cumulative { .. }, Coordinates::Full) => out.copy_from_slice(pi),
                (Agent::Cumulative { .. }, Coordinates::Reduced) => {
                    let last = pi[pi.len() - 1];
                    out.iter_mut().zip(pi).for_each(|(o, v)| *o = v - last);
                }
                (Agent::Escort { escort, .. }, _) => escort.velocity_into(&x[a0..a1], pi, out)?,
            }
        }
        if self.damping != 0.0 {
            for (d, v) in dz[..self.state_dim].iter_mut().zip(z) {
                *d -= self.damping * v;
            }
        }
        if self.integrals {
            let base = self.state_dim;
            dz[base..base + total].copy_from_slice(&p);
            for i in 0..self.system.agents.len() {
                let (a0, a1) = (offsets[i], offsets[i + 1]);
                dz[base + total + i] = x[a0..a1].iter().zip(&p[a0..a1]).map(|(a, b)| a * b).sum();
            }
        }
        Ok(())
    }

    fn has_regimes(&self) -> bool {
        self.system
            .agents
            .iter()
            .any(|a| a.dynamic().is_some_and(DynamicSpec::has_kinks))
    }

    fn regime(&self, z: &[f64], out: &mut Vec<u8>) -> Result<()> {
        for (i, agent) in self.system.agents.iter().enumerate() {
            if let Agent::Cumulative { dynamic, .. } = agent {
                let block = &z[self.state_offsets[i]..self.state_offsets[i + 1]];
                match self.coords {
                    Coordinates::Full => dynamic.active_set(block, out)?,
                    Coordinates::Reduced => dynamic.active_set(&embed_coordinates(block), out)?,
                }
            }
        }
        Ok(())
    }
}

impl Plant for ClosedLoopField<'_> {
    fn layout(&self) -> (Vec<usize>, Vec<bool>) {
        (
            self.system.game.action_counts().to_vec(),
            self.system.agents.iter().map(Agent::is_escort).collect(),
        )
    }

    fn observe(&self, _stage: Stage, z: &[f64], obs: &mut Observation) -> Result<()> {
        let game = &self.system.game;
        let offsets = game.offsets();
        self.strategies(z, &mut obs.x)?;
        game.payoff_flat(&obs.x, &mut obs.p);
        for (i, agent) in self.system.agents.iter().enumerate() {
            let block = &z[self.state_offsets[i]..self.state_offsets[i + 1]];
            let out = &mut obs.state[offsets[i]..offsets[i + 1]];
            match (agent, self.coords) {
                (Agent::Cumulative { .. }, Coordinates::Reduced) => {
                    out[..block.len()].copy_from_slice(block);
                    out[block.len()] = 0.0;
                }
                _ => out.copy_from_slice(block),
            }
            obs.storage[i] = match agent {
                Agent::Cumulative { dynamic, .. } => {
                    let shift = match &self.system.reference {
                        Some(r) => Shift::Strategy(r.agent(i).to_vec()),
                        None => Shift::Zero,
                    };
                    dynamic.storage_value(&obs.state[offsets[i]..offsets[i + 1]], &shift)?
                }
                Agent::Escort { .. } => f64::NAN,
            };
        }
        Ok(())
    }

    fn interior(&self, z: &[f64]) -> bool {
        self.system.agents.iter().enumerate().all(|(i, a)| {
            !a.is_escort()
                || z[self.state_offsets[i]..self.state_offsets[i + 1]]
                    .iter()
                    .all(|v| *v >= BOUNDARY_GUARD)
        })
    }

    fn state_dim(&self) -> usize {
        self.state_dim
    }
}
