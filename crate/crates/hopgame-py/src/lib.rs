//! Python bindings: the main types and operations behind an in-process
//! module, so scripts can build topologies, solve local games, and run
//! scenarios without shelling out to the CLI.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use hopgame::cli::config::ScenarioFile;
use hopgame::coverage_scenario::{make_coverage_potentials, RoiGaussian};
use hopgame::game_core::{build_local_game, joint_payoff, ActionSet, PayoffWeights, RobotState};
use hopgame::mf_solver::{best_response_profile, oracle_exact, solve_local_game, SolverConfig};
use hopgame::net_topology::{
    build_link_graph, connectivity_sweep, neighborhood, received_power, Position,
};
use hopgame::sim_engine::{consensus_metric, run};

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn positions_from(py_positions: Vec<(f64, f64, f64)>) -> PyResult<Vec<Position>> {
    py_positions
        .into_iter()
        .map(|(x, y, z)| Position::new(x, y, z).map_err(value_err))
        .collect()
}

/// Link-budget parameters of the wireless model.
#[pyclass(name = "LinkParams", from_py_object)]
#[derive(Clone)]
struct PyLinkParams {
    inner: hopgame::net_topology::LinkModelParams,
}

#[pymethods]
impl PyLinkParams {
    #[new]
    #[pyo3(signature = (
        tx_power_dbm=16.02,
        ref_loss_db=46.67,
        path_loss_exponent=2.0,
        rx_sensitivity_dbm=-85.0,
        ref_distance_m=1.0,
    ))]
    fn new(
        tx_power_dbm: f64,
        ref_loss_db: f64,
        path_loss_exponent: f64,
        rx_sensitivity_dbm: f64,
        ref_distance_m: f64,
    ) -> PyResult<Self> {
        hopgame::net_topology::LinkModelParams::new(
            tx_power_dbm,
            ref_loss_db,
            path_loss_exponent,
            rx_sensitivity_dbm,
            ref_distance_m,
        )
        .map(|inner| Self { inner })
        .map_err(value_err)
    }

    /// Received power in dBm at a distance in meters.
    fn received_power(&self, d: f64) -> PyResult<f64> {
        received_power(&self.inner, d).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "LinkParams(tx_power_dbm={}, ref_loss_db={}, path_loss_exponent={}, rx_sensitivity_dbm={}, ref_distance_m={})",
            self.inner.tx_power_dbm,
            self.inner.ref_loss_db,
            self.inner.path_loss_exponent,
            self.inner.rx_sensitivity_dbm,
            self.inner.ref_distance_m,
        )
    }
}

/// Link adjacency and hop counts for a swarm snapshot.
#[pyclass(name = "TopologyGraph")]
struct PyTopologyGraph {
    inner: hopgame::net_topology::TopologyGraph,
}

#[pymethods]
impl PyTopologyGraph {
    /// Build the graph from (x, y, z) positions under a link model.
    #[staticmethod]
    fn build(positions: Vec<(f64, f64, f64)>, link: &PyLinkParams) -> PyResult<Self> {
        let positions = positions_from(positions)?;
        build_link_graph(&positions, &link.inner)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    fn n_agents(&self) -> usize {
        self.inner.n_agents()
    }

    fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.inner.is_adjacent(i, j)
    }

    /// Hop count between two agents, or None when unreachable.
    fn hop_count(&self, i: usize, j: usize) -> Option<u32> {
        self.inner.hop_count(i, j)
    }

    /// Member ids of agent i's h-hop neighborhood (i included).
    fn neighborhood(&self, i: usize, h: u32) -> PyResult<Vec<usize>> {
        neighborhood(&self.inner, i, h)
            .map(|n| n.members)
            .map_err(value_err)
    }
}

/// Per-spacing connectivity statistics for randomly placed swarms.
#[pyfunction(name = "connectivity_sweep")]
#[pyo3(signature = (n_agents, link, spacings, trials=100, seed=1))]
fn py_connectivity_sweep<'py>(
    py: Python<'py>,
    n_agents: usize,
    link: &PyLinkParams,
    spacings: Vec<f64>,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyList>> {
    let stats =
        connectivity_sweep(n_agents, &link.inner, &spacings, trials, seed).map_err(value_err)?;
    let rows = PyList::empty(py);
    for s in stats {
        let row = PyDict::new(py);
        row.set_item("spacing_m", s.spacing_m)?;
        row.set_item("avg_direct_neighbors", s.avg_direct_neighbors)?;
        row.set_item("avg_hop_count", s.avg_hop_count)?;
        row.set_item("reachable_pair_fraction", s.reachable_pair_fraction)?;
        rows.append(row)?;
    }
    Ok(rows)
}

/// Build and solve one agent's coverage local game at a swarm snapshot.
///
/// Returns a dict with the neighborhood members, per-member marginals, the
/// inferred best-response profile, and solver diagnostics.
#[pyfunction]
#[pyo3(signature = (
    positions,
    owner,
    h=2,
    link=None,
    action_delta_m=15.0,
    lattice_3d=false,
    alpha_a=1.0,
    alpha_b=0.001,
    roi_sigma_m=200.0,
    roi_resolution=40,
    virtual_neighbors=true,
))]
#[allow(clippy::too_many_arguments)]
fn solve_coverage_game<'py>(
    py: Python<'py>,
    positions: Vec<(f64, f64, f64)>,
    owner: usize,
    h: u32,
    link: Option<PyLinkParams>,
    action_delta_m: f64,
    lattice_3d: bool,
    alpha_a: f64,
    alpha_b: f64,
    roi_sigma_m: f64,
    roi_resolution: usize,
    virtual_neighbors: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let link = link.map(|l| l.inner).unwrap_or_default();
    let positions = positions_from(positions)?;
    let states: Vec<RobotState> = positions
        .iter()
        .enumerate()
        .map(|(id, &position)| RobotState { id, position })
        .collect();
    let graph = build_link_graph(&positions, &link).map_err(value_err)?;
    let actions = ActionSet::lattice(action_delta_m, lattice_3d).map_err(value_err)?;
    let roi = RoiGaussian::new(
        [0.0, 0.0],
        [
            [roi_sigma_m * roi_sigma_m, 0.0],
            [0.0, roi_sigma_m * roi_sigma_m],
        ],
        0.95,
    )
    .map_err(value_err)?;
    let potentials = make_coverage_potentials(&roi, roi_resolution, &link).map_err(value_err)?;
    let weights = PayoffWeights::new(alpha_a, alpha_b).map_err(value_err)?;
    let game = build_local_game(
        owner,
        h,
        &graph,
        &states,
        &actions,
        &potentials,
        weights,
        virtual_neighbors,
    )
    .map_err(value_err)?;

    let report = solve_local_game(&game, &SolverConfig::default())
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let profile = best_response_profile(&report.marginals);
    let payoff = joint_payoff(&game, &profile).map_err(value_err)?;

    let out = PyDict::new(py);
    out.set_item("members", game.members.clone())?;
    out.set_item(
        "marginals",
        report
            .marginals
            .marginals
            .iter()
            .map(|m| m.probs.clone())
            .collect::<Vec<_>>(),
    )?;
    out.set_item("best_response", profile)?;
    out.set_item("payoff_at_best_response", payoff)?;
    out.set_item("sweeps", report.sweeps_used)?;
    out.set_item("converged", report.converged)?;
    out.set_item("final_kl", report.final_kl)?;
    out.set_item("free_energy_trace", report.free_energy_trace.clone())?;
    Ok(out)
}

/// Exact-oracle cross-check of one small coverage game; returns marginal
/// total-variation distances and whether the profiles agree.
#[pyfunction]
#[pyo3(signature = (positions, owner, h=2, action_delta_m=15.0, alpha_a=1.0, alpha_b=0.001, roi_resolution=25))]
#[allow(clippy::too_many_arguments)]
fn oracle_cross_check<'py>(
    py: Python<'py>,
    positions: Vec<(f64, f64, f64)>,
    owner: usize,
    h: u32,
    action_delta_m: f64,
    alpha_a: f64,
    alpha_b: f64,
    roi_resolution: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let link = hopgame::net_topology::LinkModelParams::default();
    let positions = positions_from(positions)?;
    let states: Vec<RobotState> = positions
        .iter()
        .enumerate()
        .map(|(id, &position)| RobotState { id, position })
        .collect();
    let graph = build_link_graph(&positions, &link).map_err(value_err)?;
    // Planar lattice keeps the joint space enumerable.
    let actions = ActionSet::lattice(action_delta_m, false).map_err(value_err)?;
    let potentials = make_coverage_potentials(&RoiGaussian::default(), roi_resolution, &link)
        .map_err(value_err)?;
    let weights = PayoffWeights::new(alpha_a, alpha_b).map_err(value_err)?;
    let game = build_local_game(
        owner,
        h,
        &graph,
        &states,
        &actions,
        &potentials,
        weights,
        true,
    )
    .map_err(value_err)?;

    let report = solve_local_game(&game, &SolverConfig::default())
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let oracle = oracle_exact(&game).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;

    let tv: Vec<f64> = (0..game.n_members())
        .map(|j| {
            hopgame::mf_solver::total_variation(
                report.marginals.probs(j),
                oracle.marginals.probs(j),
            )
        })
        .collect();
    let out = PyDict::new(py);
    out.set_item("members", game.members.clone())?;
    out.set_item("tv_distances", tv)?;
    out.set_item("solver_profile", best_response_profile(&report.marginals))?;
    out.set_item("oracle_profile", best_response_profile(&oracle.marginals))?;
    out.set_item("pure_nash", oracle.pure_nash.clone())?;
    out.set_item("dominant_eq", oracle.dominant_eq.clone())?;
    Ok(out)
}

/// Run a scenario from its JSON text and return the per-step trace.
#[pyfunction]
fn run_scenario<'py>(py: Python<'py>, scenario_json: &str) -> PyResult<Bound<'py, PyList>> {
    let file = ScenarioFile::parse(scenario_json).map_err(PyValueError::new_err)?;
    let config = file.into_scenario().map_err(PyValueError::new_err)?;
    let records = run(&config).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let consensus = consensus_metric(&records);

    let steps = PyList::empty(py);
    for (record, agreement) in records.iter().zip(consensus) {
        let row = PyDict::new(py);
        row.set_item("step", record.step)?;
        row.set_item("swarm_mean_payoff", record.swarm_mean_payoff)?;
        row.set_item("consensus", agreement)?;
        let agents = PyList::empty(py);
        for a in &record.agents {
            let entry = PyDict::new(py);
            entry.set_item("agent_id", a.agent_id)?;
            entry.set_item("position", (a.position.x, a.position.y, a.position.z))?;
            entry.set_item("action_idx", a.action_idx)?;
            entry.set_item("payoff", a.payoff)?;
            entry.set_item("solver_sweeps", a.solver_sweeps)?;
            agents.append(entry)?;
        }
        row.set_item("agents", agents)?;
        steps.append(row)?;
    }
    Ok(steps)
}

/// The stock three-agent coverage scenario as JSON text.
#[pyfunction]
fn example_scenario_json() -> PyResult<String> {
    serde_json::to_string_pretty(&hopgame::cli::config::example_scenario())
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn hopgame_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLinkParams>()?;
    m.add_class::<PyTopologyGraph>()?;
    m.add_function(wrap_pyfunction!(py_connectivity_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(solve_coverage_game, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_cross_check, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(example_scenario_json, m)?)?;
    Ok(())
}
