//! Scenario files: the on-disk JSON schema, flag overrides, and conversion
//! into a validated [`ScenarioConfig`].
//!
//! Top-level keys are `agents`, `link`, `game`, `roi`, `solver`, and `sim`.
//! Unknown fields are rejected so typos surface as config errors rather
//! than silently falling back to defaults.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coverage_scenario::RoiGaussian;
use crate::game_core::{PayoffWeights, RobotState};
use crate::mf_solver::SolverConfig;
use crate::net_topology::{LinkModelParams, Position};
use crate::sim_engine::ScenarioConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub id: usize,
    /// [x, y, z] in meters.
    pub position: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    /// Neighborhood hop bound.
    pub h: u32,
    pub alpha_a: f64,
    pub alpha_b: f64,
    /// Displacement lattice spacing in meters.
    pub action_delta_m: f64,
    /// 27-action 3-D lattice instead of the 9-action planar one.
    #[serde(default)]
    pub action_lattice_3d: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoiSection {
    pub mean: [f64; 2],
    pub covariance: [[f64; 2]; 2],
    pub confidence: f64,
    /// Quadrature points per axis.
    pub resolution: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub steps: usize,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub virtual_neighbors: bool,
}

fn default_true() -> bool {
    true
}

/// The scenario file as written on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub agents: Vec<AgentSpec>,
    pub link: LinkModelParams,
    pub game: GameSection,
    pub roi: RoiSection,
    pub solver: SolverConfig,
    pub sim: SimSection,
}

/// Command-line overrides; flags take precedence over file values.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub h: Option<u32>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("scenario config error: {e}"))
    }

    /// Applies overrides in place. The seed override retargets both the
    /// simulation seed and the solver seed so one flag pins the whole run.
    pub fn apply_overrides(&mut self, overrides: &Overrides) {
        if let Some(steps) = overrides.steps {
            self.sim.steps = steps;
        }
        if let Some(seed) = overrides.seed {
            self.sim.seed = seed;
            self.solver.seed = seed;
        }
        if let Some(h) = overrides.h {
            self.game.h = h;
        }
    }

    /// SHA-256 over the resolved file's canonical JSON serialization.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenario file serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn into_scenario(self) -> Result<ScenarioConfig, String> {
        let initial_states = self
            .agents
            .iter()
            .map(|a| {
                Position::new(a.position[0], a.position[1], a.position[2])
                    .map(|position| RobotState { id: a.id, position })
                    .map_err(|e| format!("agent {}: {e}", a.id))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let weights =
            PayoffWeights::new(self.game.alpha_a, self.game.alpha_b).map_err(|e| e.to_string())?;
        let roi = RoiGaussian::new(self.roi.mean, self.roi.covariance, self.roi.confidence)
            .map_err(|e| e.to_string())?;
        let config = ScenarioConfig {
            initial_states,
            link: self.link,
            h: self.game.h,
            weights,
            action_delta_m: self.game.action_delta_m,
            action_lattice_3d: self.game.action_lattice_3d,
            roi,
            roi_resolution: self.roi.resolution,
            solver: self.solver,
            steps: self.sim.steps,
            seed: self.sim.seed,
            virtual_neighbors: self.sim.virtual_neighbors,
        };
        config.validate().map_err(|e| e.to_string())?;
        config.link.validate().map_err(|e| e.to_string())?;
        config.solver.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

/// A ready-to-run three-agent coverage scenario with the stock parameters:
/// h = 2, alpha_a = 1, alpha_b = 0.001, 16.02 dBm transmitters.
pub fn example_scenario() -> ScenarioFile {
    ScenarioFile {
        agents: vec![
            AgentSpec {
                id: 0,
                position: [220.0, 180.0, 50.0],
            },
            AgentSpec {
                id: 1,
                position: [260.0, 120.0, 50.0],
            },
            AgentSpec {
                id: 2,
                position: [180.0, 240.0, 50.0],
            },
        ],
        link: LinkModelParams::default(),
        game: GameSection {
            h: 2,
            alpha_a: 1.0,
            alpha_b: 0.001,
            action_delta_m: 15.0,
            action_lattice_3d: false,
        },
        roi: RoiSection {
            mean: [0.0, 0.0],
            covariance: [[40000.0, 0.0], [0.0, 40000.0]],
            confidence: 0.95,
            resolution: 40,
        },
        solver: SolverConfig {
            seed: 7,
            ..SolverConfig::default()
        },
        sim: SimSection {
            steps: 20,
            seed: 7,
            virtual_neighbors: true,
        },
    }
}
