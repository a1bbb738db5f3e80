//! Deterministic text output: fixed float formatting, CSV assembly, and
//! atomic file writes (temp file plus rename, so failures leave nothing
//! partial behind).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::net_topology::SpacingStats;
use crate::sim_engine::StepRecord;

/// Output file locations under one directory.
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub trace_csv: PathBuf,
    pub stats_csv: PathBuf,
    pub oracle_csv: PathBuf,
    pub report_json: PathBuf,
}

impl OutputPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            trace_csv: dir.join("trace.csv"),
            stats_csv: dir.join("stats.csv"),
            oracle_csv: dir.join("oracle.csv"),
            report_json: dir.join("report.json"),
        }
    }
}

/// Formats with nine significant digits, a `.` decimal separator, and
/// `NaN`/`inf` spelled out, independent of locale.
pub fn fmt_sig(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if exp > 8 {
        let scale = 10f64.powi(exp - 8);
        return format!("{:.0}", (v / scale).round() * scale);
    }
    let decimals = (8 - exp).clamp(0, 17) as usize;
    format!("{v:.decimals$}")
}

/// Canonical trace CSV for a run. The `solve_time_s` column is reserved and
/// written as zero: per-solve wall times are inherently non-reproducible,
/// and the trace contract is a deterministic byte stream; timing aggregates
/// go to the run report instead.
pub fn trace_csv_string(records: &[StepRecord], consensus: &[f64]) -> String {
    let mut out = String::from(
        "step,agent_id,x,y,z,action_idx,payoff,swarm_mean_payoff,solver_sweeps,solve_time_s,consensus\n",
    );
    for (record, &agreement) in records.iter().zip(consensus) {
        for a in &record.agents {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                record.step,
                a.agent_id,
                fmt_sig(a.position.x),
                fmt_sig(a.position.y),
                fmt_sig(a.position.z),
                a.action_idx,
                fmt_sig(a.payoff),
                fmt_sig(record.swarm_mean_payoff),
                a.solver_sweeps,
                fmt_sig(0.0),
                fmt_sig(agreement),
            ));
        }
    }
    out
}

/// Connectivity statistics CSV; unreachable sweeps carry a NaN hop column.
pub fn stats_csv_string(stats: &[SpacingStats]) -> String {
    let mut out =
        String::from("spacing_m,avg_direct_neighbors,avg_hop_count,reachable_pair_fraction\n");
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig(s.spacing_m),
            fmt_sig(s.avg_direct_neighbors),
            fmt_sig(s.avg_hop_count),
            fmt_sig(s.reachable_pair_fraction),
        ));
    }
    out
}

/// Writes bytes to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_sig_cases() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-0.0), "0");
        assert_eq!(fmt_sig(1.0), "1.00000000");
        assert_eq!(fmt_sig(12.3456789012), "12.3456789");
        assert_eq!(fmt_sig(-0.001234567891), "-0.00123456789");
        assert_eq!(fmt_sig(f64::NAN), "NaN");
        assert_eq!(fmt_sig(f64::INFINITY), "inf");
        assert_eq!(fmt_sig(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_sig(1.23456789e12), "1234567890000");
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("file.csv");
        write_atomic(&path, b"one\n").unwrap();
        write_atomic(&path, b"two\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two\n");
        assert!(!path.with_extension("tmp").exists());
    }
}
