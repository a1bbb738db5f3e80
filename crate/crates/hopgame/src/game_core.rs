//! The stage game played by each agent against its neighborhood.
//!
//! Every agent carries a discrete displacement lattice as its action set.
//! The payoff over a neighborhood factorizes into strictly positive unary
//! and pairwise potentials weighted by `alpha_a` and `alpha_b`; unary
//! potentials see the acting member's post-action position against the
//! (static) effective states of the rest, pairwise potentials see two
//! post-action positions. Members whose own neighborhood reaches outside
//! the owner's are replaced by a virtual mean state aggregated over their
//! neighborhood.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::net_topology::{neighborhood, Position, TopologyError, TopologyGraph};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GameError {
    #[error("action set must be non-empty")]
    EmptyActionSet,
    #[error("action set must contain the zero displacement")]
    MissingZeroAction,
    #[error("action set contains a duplicate displacement")]
    DuplicateAction,
    #[error("joint action has {got} entries, expected {expected}")]
    ProfileLength { got: usize, expected: usize },
    #[error("action index {index} out of range for member {member} ({len} actions)")]
    ActionOutOfRange {
        member: usize,
        index: usize,
        len: usize,
    },
    #[error("payoff weights must not both be zero")]
    ZeroWeights,
    #[error("weights must be finite and non-negative")]
    BadWeights,
    #[error("states inconsistent with graph: {0}")]
    InconsistentStates(String),
    #[error("local game field lengths disagree: {0}")]
    MalformedGame(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// One agent's snapshot: identity plus physical state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub id: usize,
    pub position: Position,
}

/// A discrete action set of 3-D displacement vectors in meters.
///
/// Always contains the zero displacement, which is placed first so that
/// index 0 is "stay in place" and deterministic tie-breaking favors not
/// moving.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    displacements: Vec<[f64; 3]>,
}

impl ActionSet {
    pub fn new(displacements: Vec<[f64; 3]>) -> Result<Self, GameError> {
        if displacements.is_empty() {
            return Err(GameError::EmptyActionSet);
        }
        if !displacements.contains(&[0.0, 0.0, 0.0]) {
            return Err(GameError::MissingZeroAction);
        }
        for (i, d) in displacements.iter().enumerate() {
            if displacements[..i].contains(d) {
                return Err(GameError::DuplicateAction);
            }
        }
        Ok(Self { displacements })
    }

    /// The `{-delta, 0, +delta}` lattice: 9 planar actions, or 27 with the
    /// vertical axis included. The zero displacement comes first, the rest
    /// in ascending (dx, dy, dz) order.
    pub fn lattice(delta: f64, include_z: bool) -> Result<Self, GameError> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(GameError::MalformedGame(format!(
                "lattice spacing must be positive and finite, got {delta}"
            )));
        }
        let steps = [-delta, 0.0, delta];
        let z_steps: &[f64] = if include_z { &steps } else { &[0.0] };
        let mut displacements = vec![[0.0, 0.0, 0.0]];
        for &dx in &steps {
            for &dy in &steps {
                for &dz in z_steps {
                    if dx == 0.0 && dy == 0.0 && dz == 0.0 {
                        continue;
                    }
                    displacements.push([dx, dy, dz]);
                }
            }
        }
        Self::new(displacements)
    }

    pub fn len(&self) -> usize {
        self.displacements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacements.is_empty()
    }

    pub fn displacement(&self, index: usize) -> [f64; 3] {
        self.displacements[index]
    }

    pub fn displacements(&self) -> &[[f64; 3]] {
        &self.displacements
    }
}

type UnaryFn = dyn Fn(&Position, &[Position]) -> f64 + Send + Sync;
type UnaryBatchFn = dyn Fn(&[Position], &[Position]) -> Vec<f64> + Send + Sync;
type PairwiseFn = dyn Fn(&Position, &Position) -> f64 + Send + Sync;

/// The unary and pairwise factor potentials of the payoff.
///
/// Both functions must be stateless, return values in `(0, 1]` for all
/// finite inputs, and the pairwise potential must be symmetric in its
/// arguments. The unary potential receives the acting member's candidate
/// position and the static effective positions of the other members.
#[derive(Clone)]
pub struct PotentialPair {
    unary: Arc<UnaryFn>,
    pairwise: Arc<PairwiseFn>,
    /// Optional fast path evaluating many candidates against one shared
    /// context; must agree with `unary` value-for-value.
    unary_batch: Option<Arc<UnaryBatchFn>>,
}

impl PotentialPair {
    pub fn new(
        unary: impl Fn(&Position, &[Position]) -> f64 + Send + Sync + 'static,
        pairwise: impl Fn(&Position, &Position) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            unary: Arc::new(unary),
            pairwise: Arc::new(pairwise),
            unary_batch: None,
        }
    }

    /// Installs a batch evaluator for the unary potential. Callers rely on
    /// it returning exactly `candidates.map(|c| unary(c, context))`.
    pub fn with_unary_batch(
        mut self,
        batch: impl Fn(&[Position], &[Position]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.unary_batch = Some(Arc::new(batch));
        self
    }

    pub fn unary(&self, candidate: &Position, context: &[Position]) -> f64 {
        (self.unary)(candidate, context)
    }

    /// Unary values for many candidates sharing one context.
    pub fn unary_batch(&self, candidates: &[Position], context: &[Position]) -> Vec<f64> {
        match &self.unary_batch {
            Some(batch) => batch(candidates, context),
            None => candidates.iter().map(|c| self.unary(c, context)).collect(),
        }
    }

    pub fn pairwise(&self, a: &Position, b: &Position) -> f64 {
        (self.pairwise)(a, b)
    }
}

impl fmt::Debug for PotentialPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PotentialPair { .. }")
    }
}

/// Weights on the unary and pairwise sums of the payoff.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PayoffWeights {
    pub alpha_a: f64,
    pub alpha_b: f64,
}

impl PayoffWeights {
    pub fn new(alpha_a: f64, alpha_b: f64) -> Result<Self, GameError> {
        if !(alpha_a.is_finite() && alpha_b.is_finite()) || alpha_a < 0.0 || alpha_b < 0.0 {
            return Err(GameError::BadWeights);
        }
        if alpha_a == 0.0 && alpha_b == 0.0 {
            return Err(GameError::ZeroWeights);
        }
        Ok(Self { alpha_a, alpha_b })
    }
}

impl Default for PayoffWeights {
    fn default() -> Self {
        Self {
            alpha_a: 1.0,
            alpha_b: 0.001,
        }
    }
}

/// One neighborhood's decomposed game: the owner, its members in id order,
/// their true and effective states, per-member action sets, and the shared
/// potentials and weights.
#[derive(Debug, Clone)]
pub struct LocalGame {
    pub owner: usize,
    /// Global agent ids, ascending; contains `owner`.
    pub members: Vec<usize>,
    /// True states, one per member.
    pub states: Vec<RobotState>,
    /// Either the true position or the virtual mean; the owner always
    /// keeps its true position.
    pub effective_states: Vec<Position>,
    pub actions: Vec<ActionSet>,
    pub potentials: PotentialPair,
    pub weights: PayoffWeights,
}

impl LocalGame {
    pub fn new(
        owner: usize,
        members: Vec<usize>,
        states: Vec<RobotState>,
        effective_states: Vec<Position>,
        actions: Vec<ActionSet>,
        potentials: PotentialPair,
        weights: PayoffWeights,
    ) -> Result<Self, GameError> {
        let n = members.len();
        if n == 0 {
            return Err(GameError::MalformedGame("no members".into()));
        }
        if states.len() != n || effective_states.len() != n || actions.len() != n {
            return Err(GameError::MalformedGame(format!(
                "members={n}, states={}, effective={}, actions={}",
                states.len(),
                effective_states.len(),
                actions.len()
            )));
        }
        if !members.contains(&owner) {
            return Err(GameError::MalformedGame("owner not a member".into()));
        }
        Ok(Self {
            owner,
            members,
            states,
            effective_states,
            actions,
            potentials,
            weights,
        })
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    /// Local index of the owner within `members`.
    pub fn owner_index(&self) -> usize {
        self.members.iter().position(|&m| m == self.owner).unwrap()
    }

    /// Post-action position of member `j` under action `index`.
    pub fn candidate(&self, j: usize, index: usize) -> Position {
        self.effective_states[j].offset(self.actions[j].displacement(index))
    }

    /// Static effective positions of all members except `j`, in member order.
    pub fn context_of(&self, j: usize) -> Vec<Position> {
        self.effective_states
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, p)| *p)
            .collect()
    }

    fn check_profile(&self, joint_action: &[usize]) -> Result<(), GameError> {
        if joint_action.len() != self.n_members() {
            return Err(GameError::ProfileLength {
                got: joint_action.len(),
                expected: self.n_members(),
            });
        }
        for (j, &a) in joint_action.iter().enumerate() {
            if a >= self.actions[j].len() {
                return Err(GameError::ActionOutOfRange {
                    member: j,
                    index: a,
                    len: self.actions[j].len(),
                });
            }
        }
        Ok(())
    }
}

/// The factorized payoff of a joint action profile:
/// `alpha_a * sum_j unary(candidate_j, context_j) +
///  alpha_b * sum_{j<k} pairwise(candidate_j, candidate_k)`,
/// with candidates at post-action positions and unary contexts at the
/// static effective positions.
pub fn joint_payoff(game: &LocalGame, joint_action: &[usize]) -> Result<f64, GameError> {
    game.check_profile(joint_action)?;
    let n = game.n_members();
    let candidates: Vec<Position> = (0..n).map(|j| game.candidate(j, joint_action[j])).collect();

    let mut unary_sum = 0.0;
    for (j, candidate) in candidates.iter().enumerate() {
        let context = game.context_of(j);
        unary_sum += game.potentials.unary(candidate, &context);
    }
    let mut pair_sum = 0.0;
    for j in 0..n {
        for k in (j + 1)..n {
            pair_sum += game.potentials.pairwise(&candidates[j], &candidates[k]);
        }
    }
    Ok(game.weights.alpha_a * unary_sum + game.weights.alpha_b * pair_sum)
}

/// The virtual mean state of agent `j`: the componentwise average position
/// over `j`'s own neighborhood (which includes `j`).
pub fn virtual_mean_state(
    neighborhood_j: &crate::net_topology::Neighborhood,
    states: &[RobotState],
) -> Position {
    let n = neighborhood_j.members.len() as f64;
    let mut x = 0.0;
    let mut y = 0.0;
    let mut z = 0.0;
    for &k in &neighborhood_j.members {
        x += states[k].position.x;
        y += states[k].position.y;
        z += states[k].position.z;
    }
    Position {
        x: x / n,
        y: y / n,
        z: z / n,
    }
}

/// Assembles the owner's local game from the current topology.
///
/// Members are the owner's h-hop neighborhood. When `virtual_neighbors` is
/// on, any member whose own neighborhood reaches outside the owner's is
/// replaced by its virtual mean state; the owner and fully visible members
/// keep their true states. All members share the same action set.
#[allow(clippy::too_many_arguments)]
pub fn build_local_game(
    owner: usize,
    h: u32,
    graph: &TopologyGraph,
    states: &[RobotState],
    actions: &ActionSet,
    potentials: &PotentialPair,
    weights: PayoffWeights,
    virtual_neighbors: bool,
) -> Result<LocalGame, GameError> {
    if states.len() != graph.n_agents() {
        return Err(GameError::InconsistentStates(format!(
            "{} states for {} agents",
            states.len(),
            graph.n_agents()
        )));
    }
    for (i, s) in states.iter().enumerate() {
        if s.id != i {
            return Err(GameError::InconsistentStates(format!(
                "state at index {i} has id {}",
                s.id
            )));
        }
    }

    let own = neighborhood(graph, owner, h)?;
    let member_states: Vec<RobotState> = own.members.iter().map(|&j| states[j]).collect();
    let mut effective_states: Vec<Position> = member_states.iter().map(|s| s.position).collect();

    if virtual_neighbors {
        for (idx, &j) in own.members.iter().enumerate() {
            if j == owner {
                continue;
            }
            let nbhd_j = neighborhood(graph, j, h)?;
            let escapes = nbhd_j.members.iter().any(|k| !own.contains(*k));
            if escapes {
                effective_states[idx] = virtual_mean_state(&nbhd_j, states);
            }
        }
    }

    let actions = vec![actions.clone(); own.members.len()];
    LocalGame::new(
        owner,
        own.members,
        member_states,
        effective_states,
        actions,
        potentials.clone(),
        weights,
    )
}

// ---------------------------------------------------------------------------
// Seeded random games (used by the oracle-check command and tests)
// ---------------------------------------------------------------------------

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn point_hash(seed: u64, p: &Position) -> u64 {
    let mut h = mix64(seed ^ 0x9E37_79B9_7F4A_7C15);
    h = mix64(h ^ p.x.to_bits());
    h = mix64(h ^ p.y.to_bits());
    h = mix64(h ^ p.z.to_bits());
    h
}

fn unit_from_hash(h: u64) -> f64 {
    // Top 53 bits -> [0, 1), flipped into (0, 1].
    1.0 - (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Deterministic pseudo-random potentials keyed on position bits.
///
/// Both outputs are strictly positive in `(0, 1]`, the pairwise value is
/// symmetric, and the unary value ignores its context. Useful as a
/// structureless stand-in payoff when validating the solver against the
/// exact oracle.
pub fn hash_potentials(seed: u64) -> PotentialPair {
    let pair_seed = mix64(seed ^ 0xA5A5_A5A5_A5A5_A5A5);
    PotentialPair::new(
        move |candidate: &Position, _context: &[Position]| {
            unit_from_hash(point_hash(seed, candidate))
        },
        move |a: &Position, b: &Position| {
            // Commutative combination keeps the potential symmetric.
            let ha = point_hash(pair_seed, a);
            let hb = point_hash(pair_seed, b);
            unit_from_hash(mix64(ha.wrapping_add(hb)))
        },
    )
}

/// A seeded random local game with up to `max_members` members and up to
/// `max_actions` actions per member, over hash potentials. Pairwise weights
/// are drawn from a small palette spanning near-separable to strongly
/// coupled games.
pub fn random_local_game(
    rng: &mut impl Rng,
    max_members: usize,
    max_actions: usize,
) -> Result<LocalGame, GameError> {
    let n = rng.random_range(1..=max_members.max(1));
    let n_actions = if max_actions <= 1 {
        1
    } else {
        rng.random_range(2..=max_actions)
    };

    let members: Vec<usize> = (0..n).collect();
    let states: Vec<RobotState> = (0..n)
        .map(|id| RobotState {
            id,
            position: Position {
                x: rng.random::<f64>() * 100.0,
                y: rng.random::<f64>() * 100.0,
                z: rng.random::<f64>() * 20.0,
            },
        })
        .collect();
    let effective_states: Vec<Position> = states.iter().map(|s| s.position).collect();

    let mut actions = Vec::with_capacity(n);
    for _ in 0..n {
        let mut displacements = vec![[0.0, 0.0, 0.0]];
        while displacements.len() < n_actions {
            let d = [
                rng.random::<f64>() * 10.0 - 5.0,
                rng.random::<f64>() * 10.0 - 5.0,
                rng.random::<f64>() * 10.0 - 5.0,
            ];
            if !displacements.contains(&d) {
                displacements.push(d);
            }
        }
        actions.push(ActionSet::new(displacements)?);
    }

    let alpha_b = *[0.001, 0.05, 0.3].get(rng.random_range(0..3)).unwrap();
    let weights = PayoffWeights::new(1.0, alpha_b)?;
    let potentials = hash_potentials(rng.random::<u64>());

    LocalGame::new(
        0,
        members,
        states,
        effective_states,
        actions,
        potentials,
        weights,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net_topology::{build_link_graph, LinkModelParams};

    fn pos(x: f64, y: f64, z: f64) -> Position {
        Position::new(x, y, z).unwrap()
    }

    fn constant_potentials(c: f64, p: f64) -> PotentialPair {
        PotentialPair::new(move |_, _| c, move |_, _| p)
    }

    fn simple_game(n: usize, potentials: PotentialPair, weights: PayoffWeights) -> LocalGame {
        let members: Vec<usize> = (0..n).collect();
        let states: Vec<RobotState> = (0..n)
            .map(|id| RobotState {
                id,
                position: pos(10.0 * id as f64, 0.0, 5.0),
            })
            .collect();
        let effective: Vec<Position> = states.iter().map(|s| s.position).collect();
        let actions = vec![ActionSet::lattice(1.0, false).unwrap(); n];
        LocalGame::new(0, members, states, effective, actions, potentials, weights).unwrap()
    }

    #[test]
    fn action_set_invariants() {
        assert_eq!(ActionSet::new(vec![]), Err(GameError::EmptyActionSet));
        assert_eq!(
            ActionSet::new(vec![[1.0, 0.0, 0.0]]),
            Err(GameError::MissingZeroAction)
        );
        assert_eq!(
            ActionSet::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]),
            Err(GameError::DuplicateAction)
        );
        let planar = ActionSet::lattice(2.0, false).unwrap();
        assert_eq!(planar.len(), 9);
        assert_eq!(planar.displacement(0), [0.0, 0.0, 0.0]);
        let full = ActionSet::lattice(2.0, true).unwrap();
        assert_eq!(full.len(), 27);
        assert_eq!(full.displacement(0), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn weights_validation() {
        assert_eq!(PayoffWeights::new(0.0, 0.0), Err(GameError::ZeroWeights));
        assert_eq!(PayoffWeights::new(-1.0, 0.5), Err(GameError::BadWeights));
        assert!(PayoffWeights::new(1.0, 0.0).is_ok());
    }

    #[test]
    fn constant_potentials_payoff() {
        // 3 members: 3 unary terms and 3 unordered pairs.
        let game = simple_game(
            3,
            constant_potentials(0.5, 0.25),
            PayoffWeights::new(1.0, 0.001).unwrap(),
        );
        let m = joint_payoff(&game, &[0, 0, 0]).unwrap();
        assert!((m - (3.0 * 0.5 + 0.003 * 0.25)).abs() < 1e-15);
    }

    #[test]
    fn zero_pair_weight_drops_pair_sum() {
        let game = simple_game(
            3,
            constant_potentials(0.5, 0.25),
            PayoffWeights::new(2.0, 0.0).unwrap(),
        );
        let m = joint_payoff(&game, &[1, 2, 3]).unwrap();
        assert!((m - 2.0 * 1.5).abs() < 1e-15);
    }

    #[test]
    fn singleton_payoff_has_no_pairs() {
        let game = simple_game(
            1,
            constant_potentials(0.7, 0.25),
            PayoffWeights::new(1.5, 10.0).unwrap(),
        );
        let m = joint_payoff(&game, &[0]).unwrap();
        assert!((m - 1.5 * 0.7).abs() < 1e-15);
    }

    #[test]
    fn joint_payoff_validates_profile() {
        let game = simple_game(2, constant_potentials(0.5, 0.5), PayoffWeights::default());
        assert!(matches!(
            joint_payoff(&game, &[0]),
            Err(GameError::ProfileLength { .. })
        ));
        assert!(matches!(
            joint_payoff(&game, &[0, 99]),
            Err(GameError::ActionOutOfRange { .. })
        ));
    }

    #[test]
    fn payoff_matches_explicit_factor_list() {
        // Independent oracle: enumerate the factor list by hand and re-sum.
        let potentials = hash_potentials(1234);
        let weights = PayoffWeights::new(0.8, 0.2).unwrap();
        let game = simple_game(4, potentials.clone(), weights);
        let profile = [3, 1, 4, 0];

        let candidates: Vec<Position> = (0..4).map(|j| game.candidate(j, profile[j])).collect();
        let mut factors: Vec<f64> = Vec::new();
        for j in 0..4 {
            let ctx: Vec<Position> = (0..4)
                .filter(|&k| k != j)
                .map(|k| game.effective_states[k])
                .collect();
            factors.push(weights.alpha_a * potentials.unary(&candidates[j], &ctx));
        }
        for j in 0..4 {
            for k in (j + 1)..4 {
                factors.push(weights.alpha_b * potentials.pairwise(&candidates[j], &candidates[k]));
            }
        }
        let oracle: f64 = factors.iter().sum();
        let got = joint_payoff(&game, &profile).unwrap();
        assert!((got - oracle).abs() < 1e-12, "got {got}, oracle {oracle}");
    }

    #[test]
    fn payoff_invariant_under_member_permutation() {
        let potentials = hash_potentials(99);
        let weights = PayoffWeights::new(1.0, 0.5).unwrap();
        let game = simple_game(3, potentials.clone(), weights);
        let profile = [2, 5, 7];
        let base = joint_payoff(&game, &profile).unwrap();

        // Reverse the member ordering and the profile together.
        let perm = [2usize, 1, 0];
        let game2 = LocalGame::new(
            0,
            perm.iter().map(|&j| game.members[j]).collect(),
            perm.iter().map(|&j| game.states[j]).collect(),
            perm.iter().map(|&j| game.effective_states[j]).collect(),
            perm.iter().map(|&j| game.actions[j].clone()).collect(),
            potentials,
            weights,
        )
        .unwrap();
        let permuted_profile: Vec<usize> = perm.iter().map(|&j| profile[j]).collect();
        let permuted = joint_payoff(&game2, &permuted_profile).unwrap();
        assert!((base - permuted).abs() < 1e-12);
    }

    #[test]
    fn virtual_mean_examples() {
        let states: Vec<RobotState> = [(0.0, 0.0, 10.0), (1.0, 0.0, 10.0), (2.0, 0.0, 10.0)]
            .iter()
            .enumerate()
            .map(|(id, &(x, y, z))| RobotState {
                id,
                position: pos(x, y, z),
            })
            .collect();
        let nbhd = crate::net_topology::Neighborhood {
            owner: 1,
            h: 1,
            members: vec![0, 1, 2],
        };
        let mean = virtual_mean_state(&nbhd, &states);
        assert_eq!(mean, pos(1.0, 0.0, 10.0));

        let singleton = crate::net_topology::Neighborhood {
            owner: 2,
            h: 1,
            members: vec![2],
        };
        assert_eq!(virtual_mean_state(&singleton, &states), states[2].position);

        // Co-located members average to the shared point.
        let shared: Vec<RobotState> = (0..3)
            .map(|id| RobotState {
                id,
                position: pos(4.0, -7.0, 12.0),
            })
            .collect();
        assert_eq!(virtual_mean_state(&nbhd, &shared), pos(4.0, -7.0, 12.0));
    }

    /// Params with a comm range of exactly 100 m.
    fn params_range_100m() -> LinkModelParams {
        LinkModelParams {
            rx_sensitivity_dbm: -70.65,
            ..LinkModelParams::default()
        }
    }

    fn line_states(xs: &[f64]) -> Vec<RobotState> {
        xs.iter()
            .enumerate()
            .map(|(id, &x)| RobotState {
                id,
                position: pos(x, 0.0, 0.0),
            })
            .collect()
    }

    #[test]
    fn complete_graph_never_approximates() {
        let states = line_states(&[0.0, 10.0, 20.0]);
        let positions: Vec<Position> = states.iter().map(|s| s.position).collect();
        let graph = build_link_graph(&positions, &params_range_100m()).unwrap();
        let actions = ActionSet::lattice(1.0, false).unwrap();
        let game = build_local_game(
            1,
            1,
            &graph,
            &states,
            &actions,
            &hash_potentials(5),
            PayoffWeights::default(),
            true,
        )
        .unwrap();
        for (j, s) in game.states.iter().enumerate() {
            assert_eq!(game.effective_states[j], s.position);
        }
    }

    #[test]
    fn path_graph_approximates_boundary_member() {
        // Path 0-1-2-3 at 80 m spacing; owner 0 with h=1 sees {0,1}.
        // Member 1's own neighborhood {0,1,2} escapes, so its effective
        // state becomes the mean of states 0,1,2.
        let states = line_states(&[0.0, 80.0, 160.0, 240.0]);
        let positions: Vec<Position> = states.iter().map(|s| s.position).collect();
        let graph = build_link_graph(&positions, &params_range_100m()).unwrap();
        let actions = ActionSet::lattice(1.0, false).unwrap();
        let game = build_local_game(
            0,
            1,
            &graph,
            &states,
            &actions,
            &hash_potentials(5),
            PayoffWeights::default(),
            true,
        )
        .unwrap();
        assert_eq!(game.members, vec![0, 1]);
        assert_eq!(game.effective_states[0], states[0].position);
        assert_eq!(game.effective_states[1], pos(80.0, 0.0, 0.0));

        // Same game with the approximation off keeps true states.
        let raw = build_local_game(
            0,
            1,
            &graph,
            &states,
            &actions,
            &hash_potentials(5),
            PayoffWeights::default(),
            false,
        )
        .unwrap();
        assert_eq!(raw.effective_states[1], states[1].position);
    }

    #[test]
    fn isolated_owner_is_singleton_game() {
        let states = line_states(&[0.0, 5000.0]);
        let positions: Vec<Position> = states.iter().map(|s| s.position).collect();
        let graph = build_link_graph(&positions, &params_range_100m()).unwrap();
        let actions = ActionSet::lattice(1.0, false).unwrap();
        let game = build_local_game(
            0,
            2,
            &graph,
            &states,
            &actions,
            &hash_potentials(5),
            PayoffWeights::default(),
            true,
        )
        .unwrap();
        assert_eq!(game.members, vec![0]);
        assert_eq!(game.effective_states[0], states[0].position);
    }

    #[test]
    fn hash_potentials_are_positive_unit_and_symmetric() {
        let p = hash_potentials(777);
        let a = pos(1.5, -2.0, 3.0);
        let b = pos(-4.0, 0.25, 9.0);
        let u = p.unary(&a, &[b]);
        assert!(u > 0.0 && u <= 1.0);
        let forward = p.pairwise(&a, &b);
        let backward = p.pairwise(&b, &a);
        assert!(forward > 0.0 && forward <= 1.0);
        assert_eq!(forward, backward);
    }
}
