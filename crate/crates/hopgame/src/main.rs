use std::path::PathBuf;

use clap::{Parser, Subcommand};

use hopgame::cli::config::Overrides;
use hopgame::cli::{
    cmd_net_stats, cmd_oracle_check, cmd_run, NetStatsArgs, OracleCheckArgs, RunArgs,
};
use hopgame::net_topology::LinkModelParams;

/// Decentralized stage-game coordination for networked agent swarms.
#[derive(Parser)]
#[command(name = "hopgame", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write trace.csv and report.json.
    Run {
        /// Scenario JSON file (see scenarios/coverage3.json).
        scenario: PathBuf,
        /// Output directory for trace.csv and report.json.
        #[arg(long, default_value = "out")]
        output: PathBuf,
        /// Override the number of simulation steps.
        #[arg(long)]
        steps: Option<usize>,
        /// Override both the simulation and solver seeds.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the neighborhood hop bound.
        #[arg(long)]
        h: Option<u32>,
        /// Suppress the run summary on stdout.
        #[arg(long)]
        quiet: bool,
    },
    /// Sweep placement density and write per-spacing link statistics.
    NetStats {
        #[arg(long, default_value_t = 7)]
        n_agents: usize,
        /// Placement-square side lengths in meters.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "50,150,250,350,450,550,650,750,850,950"
        )]
        spacings: Vec<f64>,
        /// Random placements per spacing.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 16.02)]
        tx_power_dbm: f64,
        #[arg(long, default_value_t = 46.67)]
        ref_loss_db: f64,
        #[arg(long, default_value_t = 2.0)]
        path_loss_exponent: f64,
        #[arg(long, default_value_t = -85.0, allow_negative_numbers = true)]
        rx_sensitivity_dbm: f64,
        #[arg(long, default_value_t = 1.0)]
        ref_distance_m: f64,
        /// Output directory for stats.csv.
        #[arg(long, default_value = "out")]
        output: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// Validate the mean-field solver against exact enumeration on seeded
    /// random games.
    OracleCheck {
        #[arg(long, default_value_t = 100)]
        n_games: usize,
        /// Neighborhood size cap (at most 4 for tractable enumeration).
        #[arg(long, default_value_t = 3)]
        max_members: usize,
        /// Action count cap (at most 6 for tractable enumeration).
        #[arg(long, default_value_t = 5)]
        max_actions: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory for oracle.csv and report.json.
        #[arg(long, default_value = "out")]
        output: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            output,
            steps,
            seed,
            h,
            quiet,
        } => cmd_run(&RunArgs {
            scenario,
            output,
            overrides: Overrides { steps, seed, h },
            quiet,
        }),
        Command::NetStats {
            n_agents,
            spacings,
            trials,
            seed,
            tx_power_dbm,
            ref_loss_db,
            path_loss_exponent,
            rx_sensitivity_dbm,
            ref_distance_m,
            output,
            quiet,
        } => cmd_net_stats(&NetStatsArgs {
            n_agents,
            spacings,
            trials,
            seed,
            link: LinkModelParams {
                tx_power_dbm,
                ref_loss_db,
                path_loss_exponent,
                rx_sensitivity_dbm,
                ref_distance_m,
            },
            output,
            quiet,
        }),
        Command::OracleCheck {
            n_games,
            max_members,
            max_actions,
            seed,
            output,
            quiet,
        } => cmd_oracle_check(&OracleCheckArgs {
            n_games,
            max_members,
            max_actions,
            seed,
            output,
            quiet,
        }),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}
