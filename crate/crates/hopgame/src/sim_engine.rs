//! Discrete-time synchronous swarm simulation.
//!
//! Every step rebuilds the link topology from the current positions, has
//! each agent assemble and solve its own local game against that topology,
//! then applies all chosen displacements at once. Agents execute only their
//! own component of the inferred profile; what they inferred for their
//! neighbors is kept for the consensus metric. Payoffs are logged at the
//! profile the swarm actually executed.

use std::time::Instant;

use thiserror::Error;

use crate::coverage_scenario::{make_coverage_potentials, CoverageError, RoiGaussian};
use crate::game_core::{
    build_local_game, joint_payoff, ActionSet, GameError, PayoffWeights, RobotState,
};
use crate::mf_solver::{best_response_profile, solve_local_game, SolverConfig, SolverError};
use crate::net_topology::{build_link_graph, LinkModelParams, Position, TopologyError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario needs at least one agent")]
    NoAgents,
    #[error("steps must be >= 1")]
    NoSteps,
    #[error("agent ids must be a permutation of 0..{expected}: {detail}")]
    BadAgentIds { expected: usize, detail: String },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Full description of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Initial agent states; ids must form 0..n.
    pub initial_states: Vec<RobotState>,
    pub link: LinkModelParams,
    /// Neighborhood hop bound.
    pub h: u32,
    pub weights: PayoffWeights,
    /// Displacement lattice spacing in meters.
    pub action_delta_m: f64,
    /// Use the 27-action 3-D lattice instead of the 9-action planar one.
    pub action_lattice_3d: bool,
    pub roi: RoiGaussian,
    pub roi_resolution: usize,
    pub solver: SolverConfig,
    pub steps: usize,
    pub seed: u64,
    /// Replace partially visible neighbors by their virtual mean states.
    pub virtual_neighbors: bool,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.initial_states.is_empty() {
            return Err(SimError::NoAgents);
        }
        if self.steps < 1 {
            return Err(SimError::NoSteps);
        }
        if self.h < 1 {
            return Err(SimError::Topology(TopologyError::BadHopBound(self.h)));
        }
        let n = self.initial_states.len();
        let mut seen = vec![false; n];
        for s in &self.initial_states {
            if s.id >= n || seen[s.id] {
                return Err(SimError::BadAgentIds {
                    expected: n,
                    detail: format!("id {}", s.id),
                });
            }
            seen[s.id] = true;
        }
        Ok(())
    }
}

/// One agent's slice of a step.
#[derive(Debug, Clone)]
pub struct AgentRecord {
    pub agent_id: usize,
    /// Position after the step's displacement was applied.
    pub position: Position,
    pub action_idx: usize,
    /// Local payoff at the executed profile of this agent's neighborhood.
    pub payoff: f64,
    pub solver_sweeps: usize,
    /// Measured wall time of the local solve. Diagnostic only; canonical
    /// trace serialization zeroes it to stay reproducible.
    pub solve_time_s: f64,
    /// (member id, inferred action) over this agent's whole local game.
    pub inferred: Vec<(usize, usize)>,
}

/// One synchronous step over every agent.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub agents: Vec<AgentRecord>,
    pub swarm_mean_payoff: f64,
}

/// Runs the scenario and returns one record per step, agents in id order.
pub fn run(config: &ScenarioConfig) -> Result<Vec<StepRecord>, SimError> {
    config.validate()?;
    config.link.validate()?;
    config.solver.validate()?;

    let n = config.initial_states.len();
    let mut positions: Vec<Position> = {
        let mut ordered = config.initial_states.clone();
        ordered.sort_by_key(|s| s.id);
        ordered.into_iter().map(|s| s.position).collect()
    };

    let actions = ActionSet::lattice(config.action_delta_m, config.action_lattice_3d)?;
    let potentials = make_coverage_potentials(&config.roi, config.roi_resolution, &config.link)?;

    let mut records = Vec::with_capacity(config.steps);
    for step in 0..config.steps {
        let graph = build_link_graph(&positions, &config.link)?;
        let states: Vec<RobotState> = positions
            .iter()
            .enumerate()
            .map(|(id, &position)| RobotState { id, position })
            .collect();

        // Every agent solves against the same immutable snapshot.
        let mut games = Vec::with_capacity(n);
        let mut profiles = Vec::with_capacity(n);
        let mut sweeps = Vec::with_capacity(n);
        let mut times = Vec::with_capacity(n);
        for i in 0..n {
            let game = build_local_game(
                i,
                config.h,
                &graph,
                &states,
                &actions,
                &potentials,
                config.weights,
                config.virtual_neighbors,
            )?;
            let started = Instant::now();
            let report = solve_local_game(&game, &config.solver)?;
            times.push(started.elapsed().as_secs_f64());
            profiles.push(best_response_profile(&report.marginals));
            sweeps.push(report.sweeps_used);
            games.push(game);
        }

        // Each agent executes only its own component.
        let executed: Vec<usize> = (0..n)
            .map(|i| {
                let own = games[i].owner_index();
                profiles[i][own]
            })
            .collect();

        let mut agents = Vec::with_capacity(n);
        let mut payoff_sum = 0.0;
        for i in 0..n {
            let game = &games[i];
            let member_actions: Vec<usize> = game.members.iter().map(|&j| executed[j]).collect();
            let payoff = joint_payoff(game, &member_actions)?;
            payoff_sum += payoff;
            let inferred: Vec<(usize, usize)> = game
                .members
                .iter()
                .zip(&profiles[i])
                .map(|(&j, &a)| (j, a))
                .collect();
            agents.push(AgentRecord {
                agent_id: i,
                position: positions[i].offset(actions.displacement(executed[i])),
                action_idx: executed[i],
                payoff,
                solver_sweeps: sweeps[i],
                solve_time_s: times[i],
                inferred,
            });
        }

        for a in &agents {
            positions[a.agent_id] = a.position;
        }
        records.push(StepRecord {
            step,
            agents,
            swarm_mean_payoff: payoff_sum / n as f64,
        });
    }
    Ok(records)
}

/// Per-step agreement between inferred and executed neighbor actions: the
/// fraction of (agent, neighbor) pairs where the agent's inferred action
/// for the neighbor matches what the neighbor actually executed. Steps with
/// no communicating pairs score 1.
pub fn consensus_metric(records: &[StepRecord]) -> Vec<f64> {
    records
        .iter()
        .map(|record| {
            let executed: Vec<usize> = record.agents.iter().map(|a| a.action_idx).collect();
            let mut pairs = 0u64;
            let mut matches = 0u64;
            for agent in &record.agents {
                for &(member, inferred_action) in &agent.inferred {
                    if member == agent.agent_id {
                        continue;
                    }
                    pairs += 1;
                    if executed[member] == inferred_action {
                        matches += 1;
                    }
                }
            }
            if pairs == 0 {
                1.0
            } else {
                matches as f64 / pairs as f64
            }
        })
        .collect()
}
