//! Storage-function bookkeeping along trajectories.

use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicSpec, Shift};
use crate::error::{Error, Result};
use crate::game::{dot, ConstantSum, MixedProfile};
use crate::simulation::{Agent, SystemSpec, Trajectory};

/// Tolerance on best-response gaps when checking that a shift is an equilibrium.
pub const NASH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyVerdict {
    /// `|r(t)| ≤ tol` everywhere: the storage balance holds with equality.
    Lossless,
    /// `r(t) ≤ tol` everywhere: storage never exceeds its initial value plus supply.
    Passive,
    Violated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBalanceReport {
    /// `r(t) = L(q(t)) − L(q⁰) − ∫⟨x − x*, p⟩` on the trajectory grid.
    pub residuals: Vec<f64>,
    pub max_abs: f64,
    pub max_signed: f64,
    pub tolerance: f64,
    pub verdict: EnergyVerdict,
}

/// Energy balance of agent `agent` for `dynamic`'s storage at `shift`.
pub fn check_energy_balance(
    traj: &Trajectory,
    agent: usize,
    dynamic: &DynamicSpec,
    shift: &Shift,
    tol: f64,
) -> Result<EnergyBalanceReport> {
    check_energy_balance_with(
        traj,
        agent,
        |q| dynamic.storage_value(q, shift),
        shift.as_slice(),
        tol,
    )
}

/// Energy balance for an arbitrary storage candidate; `shift` is the point
/// subtracted from the strategy in the supply rate (`None` for zero).
pub fn check_energy_balance_with<S>(
    traj: &Trajectory,
    agent: usize,
    storage: S,
    shift: Option<&[f64]>,
    tol: f64,
) -> Result<EnergyBalanceReport>
where
    S: Fn(&[f64]) -> Result<f64>,
{
    traj.require_q(agent)?;
    if traj.is_empty() {
        return Err(Error::MissingSeries("samples"));
    }
    let l0 = storage(traj.q(0, agent).unwrap())?;
    let mut residuals = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let supply = supply_integral(traj, k, agent, shift);
        residuals.push(storage(traj.q(k, agent).unwrap())? - l0 - supply);
    }
    let max_abs = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let max_signed = residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let verdict = if max_abs <= tol {
        EnergyVerdict::Lossless
    } else if max_signed <= tol {
        EnergyVerdict::Passive
    } else {
        EnergyVerdict::Violated
    };
    Ok(EnergyBalanceReport {
        residuals,
        max_abs,
        max_signed,
        tolerance: tol,
        verdict,
    })
}

/// `∫₀ᵗ ⟨x_i − x*, p_i⟩ dτ` at sample `k`.
fn supply_integral(traj: &Trajectory, k: usize, agent: usize, shift: Option<&[f64]>) -> f64 {
    let v = traj.value_integral(k, agent);
    match shift {
        Some(s) => v - dot(s, traj.payoff_integral(k, agent)),
        None => v,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    /// `H(t) = Σ_i L_i(q_i(t))` at the equilibrium shift.
    pub series: Vec<f64>,
    pub max_abs_drift: f64,
    /// `max |H(t) − H(0)| / |H(0)|`, or the absolute drift when `H(0) = 0`.
    pub relative_drift: f64,
    pub tolerance: f64,
    pub conserved: bool,
}

/// Checks that the summed storage at a fully-mixed equilibrium is conserved.
pub fn check_constant_of_motion(
    traj: &Trajectory,
    system: &SystemSpec,
    shift: &MixedProfile,
    tol: f64,
) -> Result<DriftReport> {
    let game = system.game();
    if let ConstantSum::Violated(v) = game.validate_constant_sum() {
        return Err(Error::Hypothesis(format!(
            "edge-games ({}, {}) are not constant-sum (spread {:e})",
            v.i, v.k, v.spread
        )));
    }
    let verdict = game.verify_nash(shift, NASH_TOL)?;
    if !verdict.is_nash || !verdict.is_fully_mixed {
        return Err(Error::Hypothesis(
            "shift is not a fully-mixed Nash equilibrium".into(),
        ));
    }
    let mut dynamics = Vec::with_capacity(system.agents().len());
    for (i, a) in system.agents().iter().enumerate() {
        match a {
            Agent::Cumulative { dynamic, .. } => dynamics.push(dynamic),
            Agent::Escort { .. } => {
                return Err(Error::Hypothesis(format!(
                    "agent {i} has no cumulative-payoff state"
                )));
            }
        }
    }
    let shifts: Vec<Shift> = shift
        .agents()
        .iter()
        .map(|x| Shift::Strategy(x.clone()))
        .collect();
    let mut series = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let mut h = 0.0;
        for (i, d) in dynamics.iter().enumerate() {
            let q = traj
                .q(k, i)
                .ok_or(Error::MissingSeries("cumulative payoffs"))?;
            h += d.storage_value(q, &shifts[i])?;
        }
        series.push(h);
    }
    let h0 = *series.first().ok_or(Error::MissingSeries("samples"))?;
    let max_abs_drift = series.iter().fold(0.0f64, |m, h| m.max((h - h0).abs()));
    let relative_drift = if h0 != 0.0 {
        max_abs_drift / h0.abs()
    } else {
        max_abs_drift
    };
    Ok(DriftReport {
        series,
        max_abs_drift,
        relative_drift,
        tolerance: tol,
        conserved: relative_drift <= tol,
    })
}

/// `max_t |∫₀ᵗ ⟨x̂ − x̂*, −p̂⟩ dτ|`, the energy supplied to the game operator.
pub fn game_supply_residual(traj: &Trajectory, shift: &MixedProfile) -> Result<f64> {
    if shift.num_agents() != traj.num_agents() {
        return Err(Error::AgentCountMismatch {
            expected: traj.num_agents(),
            found: shift.num_agents(),
        });
    }
    let mut worst = 0.0f64;
    for k in 0..traj.len() {
        let mut s = 0.0;
        for i in 0..traj.num_agents() {
            s -= supply_integral(traj, k, i, Some(shift.agent(i)));
        }
        worst = worst.max(s.abs());
    }
    Ok(worst)
}
