//! Mean-field solving of a local game.
//!
//! The joint distribution over a neighborhood's actions is
//! `P(profile) ∝ exp(payoff(profile))`, equivalently a Gibbs distribution
//! with energy `E = -payoff`. The solver approximates `P` by a product of
//! per-member marginals and runs coordinate ascent: each member's marginal
//! is replaced by the softmax of its expected energy under the others'
//! current marginals, sweeping until the KL divergence between consecutive
//! sweeps drops below a threshold. An exact enumeration oracle over the
//! same energy validates the approximation on small games.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game_core::{joint_payoff, LocalGame};

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("joint action space has {0} profiles, above the oracle guard of {1}")]
    StateSpaceTooLarge(u128, u128),
    #[error("solver config invalid: {0}")]
    BadConfig(String),
}

/// One member's probability vector over its action set.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    /// Global agent id of the member.
    pub agent: usize,
    pub probs: Vec<f64>,
}

impl Marginal {
    pub fn new(agent: usize, probs: Vec<f64>) -> Self {
        debug_assert!(!probs.is_empty());
        debug_assert!(probs.iter().all(|&p| p >= 0.0));
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        Self { agent, probs }
    }

    /// Index of the largest probability; ties break to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

/// Per-member marginals, ordered as `LocalGame::members`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSet {
    pub marginals: Vec<Marginal>,
}

impl MarginalSet {
    pub fn len(&self) -> usize {
        self.marginals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marginals.is_empty()
    }

    pub fn probs(&self, j: usize) -> &[f64] {
        &self.marginals[j].probs
    }
}

/// How members are visited within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateOrder {
    RoundRobin,
    SeededRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// KL termination threshold between consecutive sweeps.
    pub delta: f64,
    pub max_sweeps: usize,
    pub update_order: UpdateOrder,
    /// Seed for the `SeededRandom` visiting order.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            delta: 1e-4,
            max_sweeps: 100,
            update_order: UpdateOrder::RoundRobin,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(SolverError::BadConfig(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.max_sweeps < 1 {
            return Err(SolverError::BadConfig("max_sweeps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Outcome of a local game solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub marginals: MarginalSet,
    pub sweeps_used: usize,
    /// KL divergence between the last two sweeps.
    pub final_kl: f64,
    /// Mean-field free energy (expected energy minus entropy) after each sweep.
    pub free_energy_trace: Vec<f64>,
    pub converged: bool,
}

// ---------------------------------------------------------------------------
// Energies
// ---------------------------------------------------------------------------

/// Unary energy of member `j` at action `x`: the negated, weighted unary
/// potential at the post-action position against the static context.
fn unary_energy(game: &LocalGame, j: usize, x: usize) -> f64 {
    let candidate = game.candidate(j, x);
    let context = game.context_of(j);
    -game.weights.alpha_a * game.potentials.unary(&candidate, &context)
}

fn pair_energy(game: &LocalGame, j: usize, x: usize, k: usize, y: usize) -> f64 {
    let a = game.candidate(j, x);
    let b = game.candidate(k, y);
    -game.weights.alpha_b * game.potentials.pairwise(&a, &b)
}

/// Precomputed energy tables for a game; the potentials are evaluated once
/// per (member, action) and once per action pair on each member pair.
struct EnergyTables {
    counts: Vec<usize>,
    unary: Vec<Vec<f64>>,
    /// Upper-triangle pair tables: `pair[j][k - j - 1][x * counts[k] + y]`.
    pair: Vec<Vec<Vec<f64>>>,
}

impl EnergyTables {
    fn new(game: &LocalGame) -> Self {
        let n = game.n_members();
        let counts: Vec<usize> = (0..n).map(|j| game.actions[j].len()).collect();
        // Batch the unary evaluations per member: the context is shared
        // across that member's actions.
        let unary: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let candidates: Vec<_> = (0..counts[j]).map(|x| game.candidate(j, x)).collect();
                let context = game.context_of(j);
                game.potentials
                    .unary_batch(&candidates, &context)
                    .into_iter()
                    .map(|v| -game.weights.alpha_a * v)
                    .collect()
            })
            .collect();
        let mut pair = Vec::with_capacity(n);
        for j in 0..n {
            let mut row = Vec::with_capacity(n - j - 1);
            for k in (j + 1)..n {
                let mut table = Vec::with_capacity(counts[j] * counts[k]);
                for x in 0..counts[j] {
                    for y in 0..counts[k] {
                        table.push(pair_energy(game, j, x, k, y));
                    }
                }
                row.push(table);
            }
            pair.push(row);
        }
        Self {
            counts,
            unary,
            pair,
        }
    }

    fn pair_energy(&self, j: usize, x: usize, k: usize, y: usize) -> f64 {
        if j < k {
            self.pair[j][k - j - 1][x * self.counts[k] + y]
        } else {
            self.pair[k][j - k - 1][y * self.counts[j] + x]
        }
    }

    fn expected_energy(&self, j: usize, x: usize, q: &[Vec<f64>]) -> f64 {
        let mut e = self.unary[j][x];
        for (k, qk) in q.iter().enumerate() {
            if k == j {
                continue;
            }
            for (y, &p) in qk.iter().enumerate() {
                e += p * self.pair_energy(j, x, k, y);
            }
        }
        e
    }

    /// Mean-field free energy: expected energy minus entropy of the product.
    fn free_energy(&self, q: &[Vec<f64>]) -> f64 {
        let n = q.len();
        let mut f = 0.0;
        for j in 0..n {
            for (x, &p) in q[j].iter().enumerate() {
                f += p * self.unary[j][x];
                if p > 0.0 {
                    f += p * p.ln();
                }
            }
            for k in (j + 1)..n {
                for (x, &px) in q[j].iter().enumerate() {
                    for (y, &py) in q[k].iter().enumerate() {
                        f += px * py * self.pair_energy(j, x, k, y);
                    }
                }
            }
        }
        f
    }
}

/// Softmax of negated energies with max-subtraction against underflow.
fn softmax_neg(energies: &[f64]) -> Vec<f64> {
    let top = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut probs: Vec<f64> = energies.iter().map(|&e| (top - e).exp()).collect();
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    probs
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Initial marginals from the unary potentials alone:
/// `Q_j(x) ∝ exp(-unary_energy(j, x))`.
pub fn init_marginals(game: &LocalGame) -> MarginalSet {
    let marginals = (0..game.n_members())
        .map(|j| {
            let energies: Vec<f64> = (0..game.actions[j].len())
                .map(|x| unary_energy(game, j, x))
                .collect();
            Marginal::new(game.members[j], softmax_neg(&energies))
        })
        .collect();
    MarginalSet { marginals }
}

/// Expected energy of member `j` playing action `x` under the others'
/// marginals, dropping all terms independent of `x`. Cost is linear in the
/// neighborhood size times the action count.
pub fn expected_energy(game: &LocalGame, j: usize, x: usize, others: &MarginalSet) -> f64 {
    let mut e = unary_energy(game, j, x);
    for k in 0..game.n_members() {
        if k == j {
            continue;
        }
        for (y, &p) in others.probs(k).iter().enumerate() {
            e += p * pair_energy(game, j, x, k, y);
        }
    }
    e
}

/// One mean-field coordinate update for member `j`:
/// `Q_j(x) ∝ exp(-expected_energy(j, x))`. The input set is not mutated.
pub fn update_marginal(game: &LocalGame, j: usize, current: &MarginalSet) -> Marginal {
    let energies: Vec<f64> = (0..game.actions[j].len())
        .map(|x| expected_energy(game, j, x, current))
        .collect();
    Marginal::new(game.members[j], softmax_neg(&energies))
}

/// KL divergence between two product distributions with matching factors:
/// the sum of the per-member KL terms. Pairs where the old marginal has
/// support the new one lacks yield `+inf`.
pub fn kl_product(old: &MarginalSet, new: &MarginalSet) -> f64 {
    assert_eq!(old.len(), new.len(), "marginal sets must have equal shape");
    let mut total = 0.0;
    for (o, n) in old.marginals.iter().zip(&new.marginals) {
        assert_eq!(o.probs.len(), n.probs.len(), "marginal shapes differ");
        for (&p, &q) in o.probs.iter().zip(&n.probs) {
            if p > 0.0 {
                if q <= 0.0 {
                    return f64::INFINITY;
                }
                total += p * (p / q).ln();
            }
        }
    }
    total.max(0.0)
}

/// Runs mean-field coordinate ascent on a local game.
///
/// Marginals start from the unary potentials; each sweep visits every
/// member once in the configured order, updating in place; the loop stops
/// when the KL divergence between consecutive sweeps falls below
/// `config.delta` or the sweep budget runs out.
pub fn solve_local_game(
    game: &LocalGame,
    config: &SolverConfig,
) -> Result<SolveReport, SolverError> {
    config.validate()?;
    let n = game.n_members();
    let tables = EnergyTables::new(game);

    let mut q: Vec<Vec<f64>> = (0..n).map(|j| softmax_neg(&tables.unary[j])).collect();

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut free_energy_trace = Vec::new();
    let mut sweeps_used = 0;
    let mut final_kl = f64::INFINITY;
    let mut converged = false;

    for _ in 0..config.max_sweeps {
        if config.update_order == UpdateOrder::SeededRandom {
            order.shuffle(&mut rng);
        }
        let before = q.clone();
        for &j in &order {
            let energies: Vec<f64> = (0..tables.counts[j])
                .map(|x| tables.expected_energy(j, x, &q))
                .collect();
            q[j] = softmax_neg(&energies);
        }
        sweeps_used += 1;
        free_energy_trace.push(tables.free_energy(&q));
        final_kl = kl_between(&before, &q);
        if final_kl < config.delta {
            converged = true;
            break;
        }
    }

    let marginals = MarginalSet {
        marginals: (0..n)
            .map(|j| Marginal::new(game.members[j], q[j].clone()))
            .collect(),
    };
    Ok(SolveReport {
        marginals,
        sweeps_used,
        final_kl,
        free_energy_trace,
        converged,
    })
}

fn kl_between(old: &[Vec<f64>], new: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (o, n) in old.iter().zip(new) {
        for (&p, &q) in o.iter().zip(n) {
            if p > 0.0 {
                if q <= 0.0 {
                    return f64::INFINITY;
                }
                total += p * (p / q).ln();
            }
        }
    }
    total.max(0.0)
}

/// The action profile formed by each member's most probable action, ties
/// broken toward the lowest index.
pub fn best_response_profile(marginals: &MarginalSet) -> Vec<usize> {
    marginals.marginals.iter().map(Marginal::argmax).collect()
}

/// Total variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(&a, &b)| (a - b).abs()).sum::<f64>()
}

// ---------------------------------------------------------------------------
// Exact oracle
// ---------------------------------------------------------------------------

const ORACLE_PROFILE_GUARD: u128 = 1_000_000;

/// Exact quantities from full enumeration of the joint action space.
#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Joint Gibbs probabilities, indexed by `encode_profile`.
    pub joint: Vec<f64>,
    /// Exact per-member marginals.
    pub marginals: MarginalSet,
    /// Profiles from which no single member can strictly improve the payoff.
    pub pure_nash: Vec<Vec<usize>>,
    /// Present when every member has an action that is a best response to
    /// every opposing profile; ties break to the lowest index.
    pub dominant_eq: Option<Vec<usize>>,
}

/// Strides for row-major profile encoding (last member varies fastest).
fn profile_strides(counts: &[usize]) -> Vec<usize> {
    let n = counts.len();
    let mut strides = vec![1usize; n];
    for j in (0..n.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * counts[j + 1];
    }
    strides
}

fn decode_profile(mut index: usize, counts: &[usize], strides: &[usize]) -> Vec<usize> {
    let mut profile = Vec::with_capacity(counts.len());
    for &s in strides {
        profile.push(index / s);
        index %= s;
    }
    profile
}

/// Exhaustive evaluation of the joint distribution `P ∝ exp(payoff)`, exact
/// marginals, pure Nash profiles, and the dominant-strategy equilibrium if
/// one exists. Energies are taken from `joint_payoff`, independently of the
/// solver's factored tables.
pub fn oracle_exact(game: &LocalGame) -> Result<OracleResult, SolverError> {
    let counts: Vec<usize> = (0..game.n_members())
        .map(|j| game.actions[j].len())
        .collect();
    let total: u128 = counts.iter().map(|&c| c as u128).product();
    if total > ORACLE_PROFILE_GUARD {
        return Err(SolverError::StateSpaceTooLarge(total, ORACLE_PROFILE_GUARD));
    }
    let total = total as usize;
    let strides = profile_strides(&counts);

    let mut payoffs = Vec::with_capacity(total);
    for idx in 0..total {
        let profile = decode_profile(idx, &counts, &strides);
        payoffs.push(joint_payoff(game, &profile).expect("enumerated profile is valid"));
    }

    // Gibbs weights with max-subtraction; energy is the negated payoff.
    let top = payoffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = payoffs.iter().map(|&m| (m - top).exp()).collect();
    let z: f64 = weights.iter().sum();
    let joint: Vec<f64> = weights.iter().map(|&w| w / z).collect();

    let mut marginals: Vec<Vec<f64>> = counts.iter().map(|&c| vec![0.0; c]).collect();
    for (idx, &p) in joint.iter().enumerate() {
        let profile = decode_profile(idx, &counts, &strides);
        for (j, &a) in profile.iter().enumerate() {
            marginals[j][a] += p;
        }
    }
    // Renormalize away accumulation error.
    for m in &mut marginals {
        let s: f64 = m.iter().sum();
        for v in m.iter_mut() {
            *v /= s;
        }
    }

    let mut pure_nash = Vec::new();
    for idx in 0..total {
        let profile = decode_profile(idx, &counts, &strides);
        let mut is_nash = true;
        'member: for j in 0..counts.len() {
            let base = idx - profile[j] * strides[j];
            for a in 0..counts[j] {
                if payoffs[base + a * strides[j]] > payoffs[idx] {
                    is_nash = false;
                    break 'member;
                }
            }
        }
        if is_nash {
            pure_nash.push(profile);
        }
    }

    let dominant_eq = find_dominant(&payoffs, &counts, &strides);

    Ok(OracleResult {
        joint,
        marginals: MarginalSet {
            marginals: marginals
                .into_iter()
                .enumerate()
                .map(|(j, probs)| Marginal::new(game.members[j], probs))
                .collect(),
        },
        pure_nash,
        dominant_eq,
    })
}

/// For each member, an action that is a best response to every opposing
/// profile (weak dominance); `None` when some member has no such action.
fn find_dominant(payoffs: &[f64], counts: &[usize], strides: &[usize]) -> Option<Vec<usize>> {
    let n = counts.len();
    let mut profile = Vec::with_capacity(n);
    for j in 0..n {
        let mut candidates: Vec<bool> = vec![true; counts[j]];
        // Visit every opposing profile via the indices where member j
        // plays action 0.
        for idx in 0..payoffs.len() {
            if !(idx / strides[j]).is_multiple_of(counts[j]) {
                continue;
            }
            let mut best = f64::NEG_INFINITY;
            for a in 0..counts[j] {
                best = best.max(payoffs[idx + a * strides[j]]);
            }
            for (a, alive) in candidates.iter_mut().enumerate() {
                if *alive && payoffs[idx + a * strides[j]] < best {
                    *alive = false;
                }
            }
        }
        let pick = candidates.iter().position(|&alive| alive)?;
        profile.push(pick);
    }
    Some(profile)
}
