//! Decentralized coordination for networked robot swarms.
//!
//! A swarm of agents communicates over an ad-hoc wireless network whose
//! links come and go as the agents move. Each agent derives a neighborhood
//! from routing-layer hop counts, plays a factorized stage game against that
//! neighborhood, and solves it locally with mean-field variational inference.
//! Higher-order neighbors it cannot see are collapsed into virtual mean
//! states aggregated from local information.
//!
//! The crate is organized bottom-up:
//!
//! - [`net_topology`] — link-budget graph construction, hop counts,
//!   h-hop neighborhoods, and connectivity statistics.
//! - [`game_core`] — states, discrete action lattices, unary/pairwise
//!   potentials, the weighted joint payoff, and local game assembly with
//!   virtual mean neighbors.
//! - [`mf_solver`] — coordinate-ascent mean-field inference over a local
//!   game, plus an exact enumeration oracle for validation.
//! - [`coverage_scenario`] — communication-aware coverage potentials:
//!   expected best signal over a Gaussian region of interest and
//!   inter-agent signal strength.
//! - [`sim_engine`] — the synchronous simulation loop and its step records.
//! - [`cli`] — scenario files, CSV/JSON outputs, and the command entry
//!   points used by the `hopgame` binary.

pub mod cli;
pub mod coverage_scenario;
pub mod game_core;
pub mod mf_solver;
pub mod net_topology;
pub mod sim_engine;

pub use coverage_scenario::{CoverageError, QuadratureGrid, RoiGaussian};
pub use game_core::{ActionSet, GameError, LocalGame, PayoffWeights, PotentialPair, RobotState};
pub use mf_solver::{Marginal, MarginalSet, OracleResult, SolveReport, SolverConfig, UpdateOrder};
pub use net_topology::{
    LinkModelParams, Neighborhood, Position, TopologyError, TopologyGraph, UNREACHABLE,
};
pub use sim_engine::{AgentRecord, ScenarioConfig, StepRecord};
