// SPDX-License-Identifier: Apache-2.0

//! `wbnoc`: runs NoC scenarios described by TOML configuration files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use anyhow::Context;
use clap::{Parser, Subcommand};

use wbnoc::{parse_config, run_scenario, ExitStatus, RunOptions, SimConfig, SimTime};

#[derive(Debug, Parser)]
#[command(
    name = "wbnoc",
    version,
    about = "Asynchronous mesh NoC with WISHBONE adapters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        config: PathBuf,
        /// Write one CSV row per transaction.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the event trace, one record per line.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Override the seed for random workloads.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the time limit, in picoseconds.
        #[arg(long)]
        until: Option<u64>,
        /// Print aggregate statistics.
        #[arg(long)]
        summary: bool,
    },
    /// Run one scenario per FIFO depth on worker threads.
    Sweep {
        config: PathBuf,
        /// Depths in flits, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        depths: Vec<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        until: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            csv,
            trace,
            seed,
            until,
            summary,
        } => load(&config, seed, until)
            .and_then(|cfg| run(&cfg, csv.as_deref(), trace.as_deref(), summary)),
        Command::Sweep {
            config,
            depths,
            seed,
            until,
        } => load(&config, seed, until).and_then(|cfg| sweep(&cfg, &depths)),
    };
    match result {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(ExitStatus::ConfigError(msg).code() as u8)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

enum Failure {
    Config(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn load(path: &Path, seed: Option<u64>, until: Option<u64>) -> Result<SimConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut cfg =
        parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        cfg.set_seed(s);
    }
    if let Some(t) = until {
        cfg.run_until = SimTime(t);
    }
    Ok(cfg)
}

fn run(
    cfg: &SimConfig,
    csv: Option<&Path>,
    trace: Option<&Path>,
    summary: bool,
) -> Result<ExitStatus, Failure> {
    let opts = RunOptions {
        retain_trace: trace.is_some(),
        ..Default::default()
    };
    let (out, status) = run_scenario(cfg, opts).context("simulation aborted")?;
    if let Some(path) = csv {
        fs::write(path, out.report.emit_csv())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = trace {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        out.trace
            .write_to(&mut w)
            .and_then(|_| w.flush())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if summary {
        print!("{}", out.report.summary());
    }
    if status != ExitStatus::Ok {
        eprintln!("{status}");
    }
    Ok(status)
}

fn sweep(cfg: &SimConfig, depths: &[usize]) -> Result<ExitStatus, Failure> {
    let mut configs = Vec::with_capacity(depths.len());
    for &d in depths {
        let mut c = cfg.clone();
        c.router.fifo_depth = d;
        c.router
            .validate()
            .map_err(|e| Failure::Config(format!("depth {d}: {e}")))?;
        configs.push(c);
    }
    let results: Vec<_> = thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| s.spawn(move || run_scenario(c, RunOptions::default())))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });

    println!("depth,status,issued,delivered,failed,drops,retransmits,violations,mean_latency_ps,max_latency_ps");
    let mut worst = ExitStatus::Ok;
    for (d, r) in depths.iter().zip(results) {
        let (out, status) = r.with_context(|| format!("depth {d}"))?;
        let a = out.report.aggregate();
        let label = match &status {
            ExitStatus::Ok => "ok",
            ExitStatus::ConfigError(_) => "config-error",
            ExitStatus::RunFailed { .. } => "run-failed",
        };
        println!(
            "{d},{label},{},{},{},{},{},{},{:.0},{}",
            a.issued,
            a.delivered,
            a.failed,
            a.drops,
            a.retransmits,
            a.violations,
            a.mean_latency_ps,
            a.max_latency_ps
        );
        if status.code() > worst.code() {
            worst = status;
        }
    }
    Ok(worst)
}
