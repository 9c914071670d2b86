//! Dispatch planning for a concentrated solar thermal (CST) plant with
//! thermal storage.
//!
//! The toolkit has three legs:
//!
//! * an optimizer — a stochastic MILP over a stratified scenario space
//!   ([`formulation`], [`milp`], [`sampling`]) producing a scenario-independent
//!   dispatch plan;
//! * a referee — a rule-based plant simulator ([`simulator`]) that executes
//!   any plan against any weather trajectory under the same physics;
//! * benchmarks — perfect-knowledge and heuristic planners ([`heuristics`])
//!   plus the evaluation/reporting pipeline ([`bench`]).

pub mod bench;
pub mod config;
pub mod data;
pub mod error;
pub mod formulation;
pub mod heuristics;
pub mod milp;
pub mod plant;
pub mod sampling;
pub mod simulator;

pub use error::Error;
