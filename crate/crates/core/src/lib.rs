//! Continuous-time learning dynamics in graphical constant-sum games.
//!
//! The crate couples FTRL, escort and convex-combination learning operators to
//! graphical games, integrates the closed loop, and checks the energy
//! bookkeeping that makes these systems lossless: storage functions that are
//! conserved, regret bounded by a constant, and recurrent orbits.
//!
//! ```
//! use lossless::dynamics::DynamicSpec;
//!
//! let mix = DynamicSpec::rd_ogd_mix(0.5).unwrap();
//! let x = mix.convert(&[0.6, 0.0]).unwrap();
//! assert!((x[0] - 0.7228).abs() < 5e-5);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod game;
mod linalg;
pub mod simulation;

pub use dynamics::{DynamicSpec, Shift};
pub use error::{Error, Result};
pub use game::{GameSpec, Matrix, MixedProfile};
pub use simulation::{simulate, simulate_open_loop, IntegratorConfig, SystemSpec, Trajectory};
