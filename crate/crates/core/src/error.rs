use thiserror::Error;

/// Errors raised by game construction, learning dynamics and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("agent {agent}: expected {expected} actions, found {found}")]
    DimensionMismatch {
        agent: usize,
        expected: usize,
        found: usize,
    },

    #[error("profile has {found} agents, game has {expected}")]
    AgentCountMismatch { expected: usize, found: usize },

    #[error("edge ({from}, {to}): expected a {expected_rows}x{expected_cols} matrix, found {rows}x{cols}")]
    EdgeShape {
        from: usize,
        to: usize,
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("edge ({from}, {to}) is invalid: {reason}")]
    InvalidEdge {
        from: usize,
        to: usize,
        reason: String,
    },

    #[error("agent {agent}: {reason}")]
    InvalidProfile { agent: usize, reason: String },

    #[error("game is not constant-sum: pair ({i}, {k}) spreads by {spread:e}")]
    NotConstantSum { i: usize, k: usize, spread: f64 },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("escort leaves have no cumulative-payoff state")]
    EscortInConvert,

    #[error("invalid shift: {0}")]
    InvalidShift(String),

    #[error("invalid dynamic: {0}")]
    InvalidDynamic(String),

    #[error("invalid escort function: {0}")]
    InvalidEscort(String),

    #[error("state is on the simplex boundary (coordinate {coordinate} = {value:e})")]
    BoundaryState { coordinate: usize, value: f64 },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid integrator config: {0}")]
    InvalidConfig(String),

    #[error("hypothesis not met: {0}")]
    Hypothesis(String),

    #[error("trajectory is missing {0}")]
    MissingSeries(&'static str),

    #[error("degenerate simplex: initial volume {0:e}")]
    DegenerateSimplex(f64),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
