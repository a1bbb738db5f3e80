//! Communication topology from a propagation-loss link model.
//!
//! Agents form an undirected link graph: an edge exists wherever the
//! received power predicted by a log-distance (Friis-style) path-loss model
//! clears the receiver sensitivity. Hop counts are shortest paths on that
//! graph, standing in for the routing table a proactive protocol such as
//! OLSR would converge to. Neighborhoods are hop-bounded node sets and
//! always contain their owner.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hop-matrix sentinel for node pairs with no connecting path.
pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("positions must be finite, got ({0}, {1}, {2})")]
    NonFinitePosition(f64, f64, f64),
    #[error("distance must be finite and non-negative, got {0}")]
    BadDistance(f64),
    #[error("invalid link model: {0}")]
    BadLinkModel(String),
    #[error("at least one position is required")]
    EmptySwarm,
    #[error("agent id {id} out of range for {n} agents")]
    AgentOutOfRange { id: usize, n: usize },
    #[error("hop bound h must be >= 1, got {0}")]
    BadHopBound(u32),
    #[error("connectivity sweep needs {0}")]
    BadSweep(&'static str),
}

/// A 3-D location in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, TopologyError> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(TopologyError::NonFinitePosition(x, y, z));
        }
        Ok(Self { x, y, z })
    }

    /// Euclidean distance to another position.
    pub fn distance(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Position shifted by a displacement vector.
    pub fn offset(&self, d: [f64; 3]) -> Position {
        Position {
            x: self.x + d[0],
            y: self.y + d[1],
            z: self.z + d[2],
        }
    }
}

/// Log-distance path-loss link model and receiver threshold.
///
/// Received power at distance `d` is
/// `tx_power_dbm - ref_loss_db - 10 * n * log10(d / ref_distance_m)`,
/// with `d` clamped below at `ref_distance_m`. A link forms when the
/// received power is at or above `rx_sensitivity_dbm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModelParams {
    /// Transmission power T0 in dBm.
    pub tx_power_dbm: f64,
    /// Reference loss L0 in dB at the reference distance.
    pub ref_loss_db: f64,
    /// Path loss exponent n (2 = free space).
    pub path_loss_exponent: f64,
    /// Receiver sensitivity: minimum received power for a usable link.
    pub rx_sensitivity_dbm: f64,
    /// Reference distance in meters for L0; also the near-field clamp.
    pub ref_distance_m: f64,
}

impl LinkModelParams {
    pub fn new(
        tx_power_dbm: f64,
        ref_loss_db: f64,
        path_loss_exponent: f64,
        rx_sensitivity_dbm: f64,
        ref_distance_m: f64,
    ) -> Result<Self, TopologyError> {
        let p = Self {
            tx_power_dbm,
            ref_loss_db,
            path_loss_exponent,
            rx_sensitivity_dbm,
            ref_distance_m,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        let all_finite = self.tx_power_dbm.is_finite()
            && self.ref_loss_db.is_finite()
            && self.path_loss_exponent.is_finite()
            && self.rx_sensitivity_dbm.is_finite()
            && self.ref_distance_m.is_finite();
        if !all_finite {
            return Err(TopologyError::BadLinkModel("non-finite parameter".into()));
        }
        if self.path_loss_exponent < 1.0 {
            return Err(TopologyError::BadLinkModel(format!(
                "path_loss_exponent must be >= 1, got {}",
                self.path_loss_exponent
            )));
        }
        if self.ref_distance_m <= 0.0 {
            return Err(TopologyError::BadLinkModel(format!(
                "ref_distance_m must be > 0, got {}",
                self.ref_distance_m
            )));
        }
        if self.rx_sensitivity_dbm >= self.tx_power_dbm {
            return Err(TopologyError::BadLinkModel(format!(
                "rx_sensitivity_dbm ({}) must be below tx_power_dbm ({})",
                self.rx_sensitivity_dbm, self.tx_power_dbm
            )));
        }
        Ok(())
    }

    /// Received power ceiling: the value at the reference distance.
    pub fn power_ceiling_dbm(&self) -> f64 {
        self.tx_power_dbm - self.ref_loss_db
    }

    /// Received power at distance `d`, assuming validated parameters and a
    /// finite non-negative distance. Hot path for potential evaluation.
    #[inline]
    pub fn received_power_at(&self, d: f64) -> f64 {
        let d_eff = d.max(self.ref_distance_m) / self.ref_distance_m;
        self.tx_power_dbm - self.ref_loss_db - 10.0 * self.path_loss_exponent * d_eff.log10()
    }
}

impl Default for LinkModelParams {
    /// 16.02 dBm transmitters with free-space reference loss at 1 m for a
    /// 5 GHz carrier and a conventional -85 dBm receiver sensitivity.
    fn default() -> Self {
        Self {
            tx_power_dbm: 16.02,
            ref_loss_db: 46.67,
            path_loss_exponent: 2.0,
            rx_sensitivity_dbm: -85.0,
            ref_distance_m: 1.0,
        }
    }
}

/// Received power in dBm at distance `d` meters.
///
/// Distances below the reference distance clamp to it, so the value is
/// capped at `tx_power_dbm - ref_loss_db` and is strictly decreasing beyond
/// the reference distance.
pub fn received_power(params: &LinkModelParams, d: f64) -> Result<f64, TopologyError> {
    params.validate()?;
    if !d.is_finite() || d < 0.0 {
        return Err(TopologyError::BadDistance(d));
    }
    Ok(params.received_power_at(d))
}

/// Link adjacency and all-pairs hop counts for a swarm snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyGraph {
    n: usize,
    adjacency: Vec<bool>,
    hops: Vec<u32>,
}

impl TopologyGraph {
    pub fn n_agents(&self) -> usize {
        self.n
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j]
    }

    /// Raw hop count; `UNREACHABLE` when no path exists.
    pub fn hops_raw(&self, i: usize, j: usize) -> u32 {
        self.hops[i * self.n + j]
    }

    /// Hop count as an option; `None` when no path exists.
    pub fn hop_count(&self, i: usize, j: usize) -> Option<u32> {
        match self.hops_raw(i, j) {
            UNREACHABLE => None,
            h => Some(h),
        }
    }

    /// Number of direct (1-hop) links of node `i`.
    pub fn degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.is_adjacent(i, j)).count()
    }

    fn check_agent(&self, i: usize) -> Result<(), TopologyError> {
        if i >= self.n {
            return Err(TopologyError::AgentOutOfRange { id: i, n: self.n });
        }
        Ok(())
    }
}

/// An agent's hop-bounded neighborhood, owner included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub owner: usize,
    pub h: u32,
    /// Member ids in ascending order; always contains `owner`.
    pub members: Vec<usize>,
}

impl Neighborhood {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.members.binary_search(&id).is_ok()
    }
}

/// Builds the link graph from positions: an edge forms where received power
/// clears the receiver sensitivity; hop counts come from breadth-first
/// search on the resulting unit-weight graph.
pub fn build_link_graph(
    positions: &[Position],
    params: &LinkModelParams,
) -> Result<TopologyGraph, TopologyError> {
    params.validate()?;
    if positions.is_empty() {
        return Err(TopologyError::EmptySwarm);
    }
    let n = positions.len();
    let mut adjacency = vec![false; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let p = received_power(params, positions[i].distance(&positions[j]))?;
            if p >= params.rx_sensitivity_dbm {
                adjacency[i * n + j] = true;
                adjacency[j * n + i] = true;
            }
        }
    }

    let mut hops = vec![UNREACHABLE; n * n];
    let mut queue = std::collections::VecDeque::new();
    for src in 0..n {
        hops[src * n + src] = 0;
        queue.clear();
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let next = hops[src * n + u] + 1;
            for v in 0..n {
                if adjacency[u * n + v] && hops[src * n + v] == UNREACHABLE {
                    hops[src * n + v] = next;
                    queue.push_back(v);
                }
            }
        }
    }

    Ok(TopologyGraph { n, adjacency, hops })
}

/// The h-hop neighborhood of agent `i`: everyone within `h` hops plus `i`
/// itself, ordered by id.
pub fn neighborhood(
    graph: &TopologyGraph,
    i: usize,
    h: u32,
) -> Result<Neighborhood, TopologyError> {
    graph.check_agent(i)?;
    if h < 1 {
        return Err(TopologyError::BadHopBound(h));
    }
    let members = (0..graph.n_agents())
        .filter(|&j| j == i || graph.hops_raw(i, j) <= h)
        .collect();
    Ok(Neighborhood {
        owner: i,
        h,
        members,
    })
}

/// Connectivity statistics for one placement-square side length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpacingStats {
    pub spacing_m: f64,
    /// Mean number of direct (1-hop) links per node.
    pub avg_direct_neighbors: f64,
    /// Mean hop count over reachable pairs; NaN when no pair is reachable.
    pub avg_hop_count: f64,
    /// Fraction of node pairs with a connecting path.
    pub reachable_pair_fraction: f64,
}

/// Sweeps placement density: for each spacing, agents are dropped uniformly
/// at random in a square of that side (fixed altitude) and link statistics
/// are averaged over seeded trials. Unreachable pairs are excluded from the
/// hop average and counted in `reachable_pair_fraction`.
pub fn connectivity_sweep(
    n_agents: usize,
    params: &LinkModelParams,
    spacings: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<SpacingStats>, TopologyError> {
    params.validate()?;
    if n_agents < 2 {
        return Err(TopologyError::BadSweep("n_agents >= 2"));
    }
    if trials < 1 {
        return Err(TopologyError::BadSweep("trials >= 1"));
    }
    if spacings.is_empty() {
        return Err(TopologyError::BadSweep("a non-empty spacing list"));
    }

    let mut out = Vec::with_capacity(spacings.len());
    for (si, &spacing) in spacings.iter().enumerate() {
        if !spacing.is_finite() || spacing < 0.0 {
            return Err(TopologyError::BadSweep("finite non-negative spacings"));
        }
        let mut degree_sum = 0.0;
        let mut hop_sum = 0.0;
        let mut reachable_pairs = 0u64;
        for trial in 0..trials {
            // Independent stream per (spacing, trial) so results do not
            // depend on evaluation order.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((si as u64) << 32) | trial as u64);
            let positions: Vec<Position> = (0..n_agents)
                .map(|_| Position {
                    x: rng.random::<f64>() * spacing,
                    y: rng.random::<f64>() * spacing,
                    z: 0.0,
                })
                .collect();
            let graph = build_link_graph(&positions, params)?;
            for i in 0..n_agents {
                degree_sum += graph.degree(i) as f64;
                for j in (i + 1)..n_agents {
                    if let Some(h) = graph.hop_count(i, j) {
                        hop_sum += h as f64;
                        reachable_pairs += 1;
                    }
                }
            }
        }
        let avg_hop_count = if reachable_pairs > 0 {
            hop_sum / reachable_pairs as f64
        } else {
            f64::NAN
        };
        let total_pairs = (n_agents * (n_agents - 1) / 2 * trials) as f64;
        out.push(SpacingStats {
            spacing_m: spacing,
            avg_direct_neighbors: degree_sum / (n_agents * trials) as f64,
            avg_hop_count,
            reachable_pair_fraction: reachable_pairs as f64 / total_pairs,
        });
    }
    Ok(out)
}
