//! Regret against the best fixed action in hindsight, and its storage bound.

use crate::dynamics::{DynamicSpec, Shift};
use crate::error::{Error, Result};
use crate::simulation::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentRegret {
    /// `R(t) = max_j ∫p_j − ∫⟨x, p⟩` on the trajectory grid.
    pub series: Vec<f64>,
    pub sup: f64,
    /// `max_j L^j(q⁰)`.
    pub bound: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub agents: Vec<AgentRegret>,
    pub tolerance: f64,
    /// `sup_t R_i(t) ≤ B_i + tol` for every agent.
    pub within_bound: bool,
}

impl RegretReport {
    pub fn min_slack(&self) -> f64 {
        self.agents
            .iter()
            .map(|a| a.slack)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Regret series and storage bounds; `dynamics[i]` is agent `i`'s learning dynamic.
pub fn regret_report(
    traj: &Trajectory,
    dynamics: &[&DynamicSpec],
    tol: f64,
) -> Result<RegretReport> {
    if dynamics.len() != traj.num_agents() {
        return Err(Error::AgentCountMismatch {
            expected: traj.num_agents(),
            found: dynamics.len(),
        });
    }
    if traj.is_empty() {
        return Err(Error::MissingSeries("samples"));
    }
    let mut agents = Vec::with_capacity(dynamics.len());
    for (i, d) in dynamics.iter().enumerate() {
        let q0 = traj
            .q(0, i)
            .ok_or(Error::MissingSeries("cumulative payoffs"))?;
        let bound = d.regret_bound(q0)?;
        let series: Vec<f64> = (0..traj.len()).map(|k| traj.regret(k, i)).collect();
        let sup = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        agents.push(AgentRegret {
            series,
            sup,
            bound,
            slack: bound - sup,
        });
    }
    let within_bound = agents.iter().all(|a| a.slack >= -tol);
    Ok(RegretReport {
        agents,
        tolerance: tol,
        within_bound,
    })
}

/// `max_{t,j} |R_j(t) − (L^j(q⁰) − L^j(q(t)))|` for agent `agent`.
///
/// Lossless dynamics satisfy the identity exactly, so the residual measures
/// integration error alone.
pub fn regret_identity_residual(
    traj: &Trajectory,
    agent: usize,
    dynamic: &DynamicSpec,
) -> Result<f64> {
    let q0 = traj
        .q(0, agent)
        .ok_or(Error::MissingSeries("cumulative payoffs"))?;
    let n = q0.len();
    let shifts: Vec<Shift> = (0..n).map(|j| Shift::unit(n, j)).collect();
    let l0 = shifts
        .iter()
        .map(|s| dynamic.storage_value(q0, s))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for k in 0..traj.len() {
        let q = traj.q(k, agent).unwrap();
        for (j, s) in shifts.iter().enumerate() {
            let predicted = l0[j] - dynamic.storage_value(q, s)?;
            worst = worst.max((traj.regret_against(k, agent, j) - predicted).abs());
        }
    }
    Ok(worst)
}
