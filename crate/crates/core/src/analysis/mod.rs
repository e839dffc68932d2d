//! Certification of trajectories: energy balances, regret bounds, recurrence
//! statistics and volume preservation.

pub mod energy;
pub mod recurrence;
pub mod regret;
pub mod report;
pub mod volume;

pub use energy::{
    check_constant_of_motion, check_energy_balance, check_energy_balance_with,
    game_supply_residual, DriftReport, EnergyBalanceReport, EnergyVerdict, NASH_TOL,
};
pub use recurrence::{
    orbit_sup_norm, recurrence_report, recurrence_report_with, RecurrenceEvent, RecurrenceReport,
    DEAD_TIME,
};
pub use regret::{regret_identity_residual, regret_report, AgentRegret, RegretReport};
pub use report::{CertificationReport, Verdict};
pub use volume::{
    divergence_of, divergence_residual, simplex_cloud, volume_drift, volume_drift_damped,
    VolumeReport, DIVERGENCE_STEP,
};
