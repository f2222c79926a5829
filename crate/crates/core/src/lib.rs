//! Discrete tabu search for parametric design.
//!
//! The engine in [`search`] walks an integer-stepped grid ([`space`]) with
//! Hooke-Jeeves exploration and pattern moves, escaping local optima through a
//! short-term tabu list and restarting from intermediate memory
//! ([`memory`]). Two design problems are provided as objectives:
//!
//! * [`fourbar`]: dimensional synthesis of a crank-rocker four-bar linkage whose
//!   coupler point should pass through a set of precision points.
//! * [`hydraulic`]: sizing of a pump, motor and integral speed controller for a
//!   closed-loop hydrostatic transmission, scored on a simulated speed response.
//!
//! [`campaign`] runs seeded multi-trial campaigns and writes CSV/JSON artifacts.

pub mod campaign;
pub mod error;
pub mod fourbar;
pub mod hydraulic;
pub mod memory;
pub mod output;
pub mod parallel;
pub mod search;
pub mod space;

pub use error::{Error, Result};
pub use memory::{BestList, TabuList};
pub use search::{search, Evaluation, Objective, SearchConfig, SearchResult, Termination};
pub use space::{Cell, DesignVector, SearchSpace};
