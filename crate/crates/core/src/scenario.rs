// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use crate::config::SimConfig;
use crate::sim::{simulate, RunOptions, SimError, SimOutput};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExitStatus {
    Ok,
    ConfigError(String),
    RunFailed {
        failed: u64,
        violations: u64,
        unfinished: u64,
    },
}

impl ExitStatus {
    pub fn code(&self) -> i32 {
        match self {
            ExitStatus::Ok => 0,
            ExitStatus::ConfigError(_) => 1,
            ExitStatus::RunFailed { .. } => 2,
        }
    }
}

impl fmt::Display for ExitStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExitStatus::Ok => f.write_str("ok"),
            ExitStatus::ConfigError(e) => write!(f, "config error: {e}"),
            ExitStatus::RunFailed {
                failed,
                violations,
                unfinished,
            } => write!(
                f,
                "run failed: {failed} failed, {unfinished} unfinished transactions, {violations} protocol violations"
            ),
        }
    }
}

/// Runs a validated configuration and classifies the outcome.
pub fn run_scenario(
    cfg: &SimConfig,
    opts: RunOptions,
) -> Result<(SimOutput, ExitStatus), SimError> {
    let out = simulate(cfg, opts)?;
    let agg = out.report.aggregate();
    let unfinished = agg.issued - agg.delivered - agg.failed;
    let expected: u64 = cfg
        .masters()
        .map(|m| {
            cfg.nodes[m]
                .workload
                .materialize(m, |s| cfg.prefix_of(s))
                .len() as u64
        })
        .sum();
    let unfinished = unfinished + expected.saturating_sub(agg.issued);
    let status = if agg.failed == 0 && agg.violations == 0 && unfinished == 0 {
        ExitStatus::Ok
    } else {
        ExitStatus::RunFailed {
            failed: agg.failed,
            violations: agg.violations,
            unfinished,
        }
    };
    Ok((out, status))
}
