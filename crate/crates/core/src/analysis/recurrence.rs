//! Returns of a trajectory to its starting strategy profile.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulation::{reduce_coordinates, Trajectory};

/// Minima this close to the start are departure noise, not returns.
pub const DEAD_TIME: f64 = 1.0;

/// Below this maximal distance the trajectory is treated as stationary.
pub const STATIONARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceEvent {
    pub t: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceReport {
    /// `d(t) = ‖x̂(t) − x̂(0)‖₂` at every sample.
    pub distances: Vec<f64>,
    /// Strict local minima of `d` below `epsilon` after the dead time.
    pub events: Vec<RecurrenceEvent>,
    /// Smallest distance after the dead time.
    pub min_distance: f64,
    pub epsilon: f64,
    pub dead_time: f64,
    /// The trajectory never leaves its start (e.g. it began at an equilibrium).
    pub degenerate: bool,
}

impl RecurrenceReport {
    pub fn returns(&self) -> usize {
        self.events.len()
    }
}

pub fn recurrence_report(traj: &Trajectory, epsilon: f64) -> Result<RecurrenceReport> {
    recurrence_report_with(traj, epsilon, DEAD_TIME)
}

pub fn recurrence_report_with(
    traj: &Trajectory,
    epsilon: f64,
    dead_time: f64,
) -> Result<RecurrenceReport> {
    if traj.is_empty() {
        return Err(Error::MissingSeries("samples"));
    }
    let x0 = traj.x(0);
    let distances: Vec<f64> = (0..traj.len())
        .map(|k| {
            traj.x(k)
                .iter()
                .zip(x0)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let times = traj.times();
    let mut events = Vec::new();
    for k in 1..distances.len().saturating_sub(1) {
        let d = distances[k];
        if times[k] >= dead_time && d < epsilon && d < distances[k - 1] && d < distances[k + 1] {
            events.push(RecurrenceEvent {
                t: times[k],
                distance: d,
            });
        }
    }
    let min_distance = distances
        .iter()
        .zip(times)
        .filter(|(_, t)| **t >= dead_time)
        .map(|(d, _)| *d)
        .fold(f64::INFINITY, f64::min);
    let degenerate = distances.iter().all(|d| *d <= STATIONARY_TOL);
    Ok(RecurrenceReport {
        distances,
        events,
        min_distance,
        epsilon,
        dead_time,
        degenerate,
    })
}

/// `sup_t ‖q̂′(t)‖₂` over the reduced cumulative payoffs of every agent.
pub fn orbit_sup_norm(traj: &Trajectory) -> Result<f64> {
    let mut sup = 0.0f64;
    for k in 0..traj.len() {
        let mut s = 0.0;
        for i in 0..traj.num_agents() {
            let q = traj
                .q(k, i)
                .ok_or(Error::MissingSeries("cumulative payoffs"))?;
            s += reduce_coordinates(q).iter().map(|v| v * v).sum::<f64>();
        }
        sup = sup.max(s.sqrt());
    }
    Ok(sup)
}
