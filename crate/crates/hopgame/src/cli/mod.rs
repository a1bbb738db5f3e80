//! Command implementations behind the `hopgame` binary: scenario runs,
//! connectivity sweeps, and solver-versus-oracle validation.
//!
//! Commands return structured errors that map onto exit codes: 2 for
//! usage/config problems, 1 for runtime failures, 0 on success. All file
//! outputs are written atomically.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::game_core::random_local_game;
use crate::mf_solver::{
    best_response_profile, oracle_exact, solve_local_game, total_variation, SolverConfig,
};
use crate::net_topology::{connectivity_sweep, LinkModelParams};
use crate::sim_engine::{consensus_metric, run};

use config::{Overrides, ScenarioFile};
use output::{fmt_sig, stats_csv_string, trace_csv_string, write_atomic, OutputPaths};

/// Pinned validation thresholds for the oracle check.
const SINGLETON_TV_TOL: f64 = 1e-12;
const DOMINANT_MATCH_MIN: f64 = 0.95;
const FREE_ENERGY_SLACK: f64 = 1e-9;
const MARGINAL_SUM_TOL: f64 = 1e-9;

/// Command failure with its exit-code category.
#[derive(Debug)]
pub enum CmdError {
    /// Usage or configuration problem; exit code 2.
    Config(String),
    /// Failure while executing a valid request; exit code 1.
    Runtime(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Config(_) => 2,
            CmdError::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CmdError::Config(m) | CmdError::Runtime(m) => m,
        }
    }
}

fn write_or_runtime(path: &Path, bytes: &[u8]) -> Result<(), CmdError> {
    write_atomic(path, bytes)
        .map_err(|e| CmdError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn report_json_bytes<T: Serialize>(report: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text.into_bytes()
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RunArgs {
    pub scenario: PathBuf,
    pub output: PathBuf,
    pub overrides: Overrides,
    pub quiet: bool,
}

#[derive(Debug, Serialize)]
struct RunTotals {
    steps: usize,
    agents: usize,
    initial_mean_payoff: f64,
    final_mean_payoff: f64,
    relative_payoff_gain: f64,
    mean_consensus: f64,
    mean_solve_time_s: f64,
    max_solve_time_s: f64,
}

#[derive(Debug, Serialize)]
struct RunFlags {
    payoff_improved: bool,
}

#[derive(Debug, Serialize)]
struct RunReport {
    config_hash: String,
    totals: RunTotals,
    flags: RunFlags,
}

/// Executes a scenario file and writes `trace.csv` plus `report.json`.
pub fn cmd_run(args: &RunArgs) -> Result<(), CmdError> {
    let text = std::fs::read_to_string(&args.scenario).map_err(|e| {
        CmdError::Config(format!(
            "cannot read scenario file {}: {e}",
            args.scenario.display()
        ))
    })?;
    let mut file = ScenarioFile::parse(&text).map_err(CmdError::Config)?;
    file.apply_overrides(&args.overrides);
    let config_hash = file.config_hash();
    let scenario = file.into_scenario().map_err(CmdError::Config)?;

    let records = run(&scenario).map_err(|e| CmdError::Runtime(e.to_string()))?;
    let consensus = consensus_metric(&records);

    let paths = OutputPaths::in_dir(&args.output);
    write_or_runtime(
        &paths.trace_csv,
        trace_csv_string(&records, &consensus).as_bytes(),
    )?;

    let initial = records.first().map(|r| r.swarm_mean_payoff).unwrap_or(0.0);
    let fin = records.last().map(|r| r.swarm_mean_payoff).unwrap_or(0.0);
    let times: Vec<f64> = records
        .iter()
        .flat_map(|r| r.agents.iter().map(|a| a.solve_time_s))
        .collect();
    let report = RunReport {
        config_hash,
        totals: RunTotals {
            steps: records.len(),
            agents: scenario.initial_states.len(),
            initial_mean_payoff: initial,
            final_mean_payoff: fin,
            relative_payoff_gain: (fin - initial) / initial,
            mean_consensus: consensus.iter().sum::<f64>() / consensus.len() as f64,
            mean_solve_time_s: times.iter().sum::<f64>() / times.len() as f64,
            max_solve_time_s: times.iter().cloned().fold(0.0, f64::max),
        },
        flags: RunFlags {
            payoff_improved: fin > initial,
        },
    };
    write_or_runtime(&paths.report_json, &report_json_bytes(&report))?;

    if !args.quiet {
        println!(
            "ran {} steps x {} agents; mean payoff {} -> {} ({:+.1}%)",
            report.totals.steps,
            report.totals.agents,
            fmt_sig(initial),
            fmt_sig(fin),
            100.0 * report.totals.relative_payoff_gain,
        );
        println!("trace:  {}", paths.trace_csv.display());
        println!("report: {}", paths.report_json.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// net-stats
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct NetStatsArgs {
    pub n_agents: usize,
    pub spacings: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub link: LinkModelParams,
    pub output: PathBuf,
    pub quiet: bool,
}

/// Sweeps placement density and writes `stats.csv`.
pub fn cmd_net_stats(args: &NetStatsArgs) -> Result<(), CmdError> {
    let stats = connectivity_sweep(
        args.n_agents,
        &args.link,
        &args.spacings,
        args.trials,
        args.seed,
    )
    .map_err(|e| CmdError::Config(e.to_string()))?;

    let paths = OutputPaths::in_dir(&args.output);
    write_or_runtime(&paths.stats_csv, stats_csv_string(&stats).as_bytes())?;

    if !args.quiet {
        println!(
            "swept {} spacings x {} trials with {} agents at {} dBm",
            args.spacings.len(),
            args.trials,
            args.n_agents,
            fmt_sig(args.link.tx_power_dbm),
        );
        for s in &stats {
            println!(
                "  spacing {:>12}: direct {}, hops {}, reachable {}",
                fmt_sig(s.spacing_m),
                fmt_sig(s.avg_direct_neighbors),
                fmt_sig(s.avg_hop_count),
                fmt_sig(s.reachable_pair_fraction),
            );
        }
        println!("stats: {}", paths.stats_csv.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// oracle-check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct OracleCheckArgs {
    pub n_games: usize,
    pub max_members: usize,
    pub max_actions: usize,
    pub seed: u64,
    pub output: PathBuf,
    pub quiet: bool,
}

#[derive(Debug, Serialize)]
struct OracleTotals {
    n_games: usize,
    singleton_games: usize,
    singleton_tv_max: f64,
    dominant_games: usize,
    dominant_matches: usize,
    dominant_match_rate: f64,
    tv_max: f64,
    mean_sweeps: f64,
}

#[derive(Debug, Serialize)]
struct OracleFlags {
    singleton_exact: bool,
    dominant_match_95: bool,
    free_energy_monotone: bool,
    marginals_normalized: bool,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct OracleReport {
    config_hash: String,
    totals: OracleTotals,
    flags: OracleFlags,
}

/// Validates the mean-field solver against exact enumeration on seeded
/// random games, writing `oracle.csv` and `report.json` and printing one
/// pass/fail line per threshold. Thresholds failing is a runtime failure.
pub fn cmd_oracle_check(args: &OracleCheckArgs) -> Result<(), CmdError> {
    if args.max_members > 4 {
        return Err(CmdError::Config(format!(
            "max_members must be <= 4 for exact enumeration, got {}",
            args.max_members
        )));
    }
    if args.max_actions > 6 {
        return Err(CmdError::Config(format!(
            "max_actions must be <= 6 for exact enumeration, got {}",
            args.max_actions
        )));
    }
    if args.max_members == 0 || args.max_actions == 0 {
        return Err(CmdError::Config(
            "max_members and max_actions must be >= 1".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let solver = SolverConfig::default();

    let mut csv = String::from(
        "game,n_members,n_actions,alpha_b,tv_max,has_dominant,dominant_match,sweeps,converged\n",
    );
    let mut singleton_games = 0usize;
    let mut singleton_tv_max = 0.0f64;
    let mut dominant_games = 0usize;
    let mut dominant_matches = 0usize;
    let mut tv_max = 0.0f64;
    let mut sweeps_sum = 0usize;
    let mut free_energy_monotone = true;
    let mut marginals_normalized = true;

    for idx in 0..args.n_games {
        let game = random_local_game(&mut rng, args.max_members, args.max_actions)
            .map_err(|e| CmdError::Runtime(format!("game generation failed: {e}")))?;
        let report =
            solve_local_game(&game, &solver).map_err(|e| CmdError::Runtime(e.to_string()))?;
        let oracle = oracle_exact(&game).map_err(|e| CmdError::Runtime(e.to_string()))?;

        let game_tv = (0..game.n_members())
            .map(|j| total_variation(report.marginals.probs(j), oracle.marginals.probs(j)))
            .fold(0.0, f64::max);
        tv_max = tv_max.max(game_tv);
        if game.n_members() == 1 {
            singleton_games += 1;
            singleton_tv_max = singleton_tv_max.max(game_tv);
        }

        let has_dominant = oracle.dominant_eq.is_some();
        let mut matched = false;
        if let Some(eq) = &oracle.dominant_eq {
            dominant_games += 1;
            matched = best_response_profile(&report.marginals) == *eq;
            if matched {
                dominant_matches += 1;
            }
        }

        for w in report.free_energy_trace.windows(2) {
            if w[1] > w[0] + FREE_ENERGY_SLACK {
                free_energy_monotone = false;
            }
        }
        for m in &report.marginals.marginals {
            if (m.probs.iter().sum::<f64>() - 1.0).abs() > MARGINAL_SUM_TOL {
                marginals_normalized = false;
            }
        }

        sweeps_sum += report.sweeps_used;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            idx,
            game.n_members(),
            game.actions[0].len(),
            fmt_sig(game.weights.alpha_b),
            fmt_sig(game_tv),
            has_dominant as u8,
            matched as u8,
            report.sweeps_used,
            report.converged as u8,
        ));
    }

    let dominant_match_rate = if dominant_games > 0 {
        dominant_matches as f64 / dominant_games as f64
    } else {
        1.0
    };
    let flags = OracleFlags {
        singleton_exact: singleton_tv_max <= SINGLETON_TV_TOL,
        dominant_match_95: dominant_match_rate >= DOMINANT_MATCH_MIN,
        free_energy_monotone,
        marginals_normalized,
        pass: false,
    };
    let pass = flags.singleton_exact
        && flags.dominant_match_95
        && flags.free_energy_monotone
        && flags.marginals_normalized;
    let config_hash = {
        use sha2::{Digest, Sha256};
        let key = format!(
            "oracle-check:n_games={},max_members={},max_actions={},seed={}",
            args.n_games, args.max_members, args.max_actions, args.seed
        );
        hex::encode(Sha256::digest(key.as_bytes()))
    };
    let report = OracleReport {
        config_hash,
        totals: OracleTotals {
            n_games: args.n_games,
            singleton_games,
            singleton_tv_max,
            dominant_games,
            dominant_matches,
            dominant_match_rate,
            tv_max,
            mean_sweeps: if args.n_games > 0 {
                sweeps_sum as f64 / args.n_games as f64
            } else {
                0.0
            },
        },
        flags: OracleFlags { pass, ..flags },
    };

    let paths = OutputPaths::in_dir(&args.output);
    write_or_runtime(&paths.oracle_csv, csv.as_bytes())?;
    write_or_runtime(&paths.report_json, &report_json_bytes(&report))?;

    if !args.quiet {
        let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
        println!(
            "oracle-check: {} games (members <= {}, actions <= {})",
            args.n_games, args.max_members, args.max_actions
        );
        println!(
            "  singleton exactness (tv <= {SINGLETON_TV_TOL:.0e}): {} (max {}, {} games)",
            verdict(report.flags.singleton_exact),
            fmt_sig(singleton_tv_max),
            singleton_games,
        );
        println!(
            "  dominant-eq match (>= {:.0}%): {} ({}/{})",
            100.0 * DOMINANT_MATCH_MIN,
            verdict(report.flags.dominant_match_95),
            dominant_matches,
            dominant_games,
        );
        println!(
            "  free energy monotone ({FREE_ENERGY_SLACK:.0e} slack): {}",
            verdict(report.flags.free_energy_monotone)
        );
        println!(
            "  marginal normalization ({MARGINAL_SUM_TOL:.0e}): {}",
            verdict(report.flags.marginals_normalized)
        );
        println!("report: {}", paths.report_json.display());
    }

    if !pass {
        return Err(CmdError::Runtime(
            "oracle-check thresholds failed; see report.json".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let scenario_path = dir.path().join("scenario.json");
        let mut file = config::example_scenario();
        file.sim.steps = 3;
        file.roi.resolution = 20;
        std::fs::write(&scenario_path, serde_json::to_string_pretty(&file).unwrap()).unwrap();

        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        for out in [&out_a, &out_b] {
            cmd_run(&RunArgs {
                scenario: scenario_path.clone(),
                output: out.clone(),
                overrides: Overrides::default(),
                quiet: true,
            })
            .unwrap();
        }
        let a = std::fs::read(out_a.join("trace.csv")).unwrap();
        let b = std::fs::read(out_b.join("trace.csv")).unwrap();
        assert_eq!(a, b);

        // Shape contract: steps x agents rows plus the header.
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 3);
        assert!(text.starts_with(
            "step,agent_id,x,y,z,action_idx,payoff,swarm_mean_payoff,solver_sweeps,solve_time_s,consensus\n"
        ));
    }

    #[test]
    fn run_rejects_malformed_scenario() {
        let dir = tempfile::tempdir().unwrap();
        let scenario_path = dir.path().join("broken.json");
        let mut value: serde_json::Value =
            serde_json::to_value(config::example_scenario()).unwrap();
        value["link"]
            .as_object_mut()
            .unwrap()
            .remove("tx_power_dbm");
        std::fs::write(&scenario_path, value.to_string()).unwrap();

        let err = cmd_run(&RunArgs {
            scenario: scenario_path,
            output: dir.path().join("out"),
            overrides: Overrides::default(),
            quiet: true,
        })
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.message().contains("tx_power_dbm"));
        assert!(!dir.path().join("out").join("trace.csv").exists());
    }

    #[test]
    fn net_stats_writes_expected_rows() {
        let dir = tempfile::tempdir().unwrap();
        cmd_net_stats(&NetStatsArgs {
            n_agents: 7,
            spacings: vec![1.0, 10.0, 100.0],
            trials: 3,
            seed: 5,
            link: LinkModelParams::default(),
            output: dir.path().to_path_buf(),
            quiet: true,
        })
        .unwrap();
        let text = std::fs::read_to_string(dir.path().join("stats.csv")).unwrap();
        assert_eq!(text.lines().count(), 4);
        // Tiny spacing keeps the 7-agent graph complete.
        let first = text.lines().nth(1).unwrap();
        assert!(
            first.starts_with("1.00000000,6.00000000,1.00000000,"),
            "{first}"
        );
    }

    #[test]
    fn oracle_check_empty_is_ok() {
        let dir = tempfile::tempdir().unwrap();
        cmd_oracle_check(&OracleCheckArgs {
            n_games: 0,
            max_members: 3,
            max_actions: 5,
            seed: 1,
            output: dir.path().to_path_buf(),
            quiet: true,
        })
        .unwrap();
        let text = std::fs::read_to_string(dir.path().join("oracle.csv")).unwrap();
        assert_eq!(text.lines().count(), 1);
    }

    #[test]
    fn oracle_check_guards_state_space() {
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_oracle_check(&OracleCheckArgs {
            n_games: 1,
            max_members: 5,
            max_actions: 5,
            seed: 1,
            output: dir.path().to_path_buf(),
            quiet: true,
        })
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
