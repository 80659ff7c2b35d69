// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use wbnoc::config::{NodeConfig, SimConfig};
use wbnoc::stats::Outcome;
use wbnoc::topology::{compute_route, decode_head_word, encode_route, Direction, MeshDims};
use wbnoc::wishbone::{MasterFault, WbRule};
use wbnoc::{run_scenario, DropPolicy, ExitStatus, Fault, RunOptions, SimOutput, WbOp};

const SEED: u64 = 0x5EED_2024;
/// Write-then-read pairs per master; eight masters give 1,000 pairs.
const PAIRS_PER_MASTER: usize = 125;
/// Retransmission timeout for the backpressure runs, well above the worst
/// queueing delay observed there.
const BACKPRESSURE_TIMEOUT_PS: u64 = 100_000_000;
const FLOOD_TIMEOUT_PS: u64 = 5_000_000;
const FLOOD_PAIRS: usize = 50;

struct Run {
    out: SimOutput,
    status: ExitStatus,
    csv: String,
    elapsed: Duration,
}

fn run(cfg: &SimConfig, opts: RunOptions) -> Run {
    let t = Instant::now();
    let (out, status) = run_scenario(cfg, opts).expect("scenario runs");
    let elapsed = t.elapsed();
    let csv = out.report.emit_csv();
    Run {
        out,
        status,
        csv,
        elapsed,
    }
}

type Verdict = Result<String, String>;

struct Suite {
    results: Vec<(u32, &'static str, Verdict)>,
    /// Configurations re-run for the determinism criterion.
    replay: Vec<(&'static str, SimConfig, RunOptions, u64, String)>,
    /// Retained traces checked for handshake legality.
    audited: Vec<(&'static str, SimOutput)>,
}

impl Suite {
    fn report(&mut self, n: u32, name: &'static str, v: Verdict) {
        match &v {
            Ok(d) => println!("criterion {n} [{name}]: PASS ({d})"),
            Err(e) => println!("criterion {n} [{name}]: FAIL ({e})"),
        }
        self.results.push((n, name, v));
    }

    fn keep(&mut self, label: &'static str, cfg: &SimConfig, opts: RunOptions, r: Run) {
        self.replay
            .push((label, cfg.clone(), opts, r.out.report.trace_hash, r.csv));
        self.audited.push((label, r.out));
    }
}

fn criterion_route_oracle() -> Verdict {
    let t = Instant::now();
    let mut pairs = 0;
    for cols in 1..=4 {
        for rows in 1..=4 {
            let dims = MeshDims::new(cols, rows).unwrap();
            for src in 0..dims.node_count() {
                for dst in 0..dims.node_count() {
                    if src == dst {
                        continue;
                    }
                    let (s, d) = (dims.coord_of(src).unwrap(), dims.coord_of(dst).unwrap());
                    let route = encode_route(&compute_route(s, d).map_err(|e| e.to_string())?)
                        .map_err(|e| e.to_string())?;
                    let mut at = s;
                    let mut from = Direction::Local;
                    let mut word = route.packed();
                    let mut hops = 0;
                    loop {
                        let (out, rest) = decode_head_word(word, from);
                        if out == Direction::Local {
                            break;
                        }
                        at = dims
                            .neighbor(at, out)
                            .ok_or(format!("{src}->{dst}: route leaves the mesh"))?;
                        from = out.opposite();
                        word = rest;
                        hops += 1;
                        if hops > 16 {
                            return Err(format!("{src}->{dst}: no local delivery"));
                        }
                    }
                    if dims.index_of(at) != dst {
                        return Err(format!("{src}->{dst}: delivered at {}", dims.index_of(at)));
                    }
                    let manhattan = s.manhattan(d);
                    if hops != manhattan || hops != bfs_hops(dims, src, dst) {
                        return Err(format!("{src}->{dst}: {hops} hops, manhattan {manhattan}"));
                    }
                    pairs += 1;
                }
            }
        }
    }
    let el = t.elapsed();
    if el >= Duration::from_secs(1) {
        return Err(format!("took {el:?}"));
    }
    Ok(format!("{pairs} pairs over 16 mesh shapes in {el:?}"))
}

fn coherence_verdict(r: &Run, cfg: &SimConfig, limit: Duration) -> Verdict {
    let rep = &r.out.report;
    let agg = rep.aggregate();
    if r.status != ExitStatus::Ok {
        return Err(format!("exit {}", r.status));
    }
    let reads = check_coherence(rep)?;
    check_memory_replay(rep, cfg)?;
    if agg.drops != 0 || agg.retransmits != 0 || agg.violations != 0 {
        return Err(format!(
            "drops {} retransmits {} violations {}",
            agg.drops, agg.retransmits, agg.violations
        ));
    }
    if reads != 1000 {
        return Err(format!("{reads} reads checked, expected 1000"));
    }
    if r.elapsed >= limit {
        return Err(format!("took {:?}", r.elapsed));
    }
    Ok(format!(
        "{reads} read-after-write pairs coherent, 0 drops/retransmits/violations, mean latency {:.0} ps, {:?}",
        agg.mean_latency_ps, r.elapsed
    ))
}

fn flood(policy: DropPolicy, max_retries: u32) -> SimConfig {
    let mut cfg = SimConfig::new(MeshDims::new(2, 2).unwrap());
    for m in 0..3 {
        cfg.nodes[m] = NodeConfig {
            workload: wbnoc::wishbone::MasterWorkload {
                ops: Vec::new(),
                mode: wbnoc::wishbone::WorkloadMode::RandomUniform {
                    count: FLOOD_PAIRS,
                    seed: SEED,
                    slaves: vec![3],
                },
            },
            ..NodeConfig::master(Vec::new())
        };
    }
    cfg.nodes[3] = NodeConfig::slave(0);
    cfg.lut = vec![(3, 3)];
    cfg.router.fifo_depth = 5;
    cfg.router.drop_policy = policy;
    cfg.flow_control.timeout = FLOOD_TIMEOUT_PS;
    cfg.flow_control.max_retries = max_retries;
    cfg.seed = SEED;
    cfg
}

fn latency_for_hops(hops: usize) -> (u64, SimConfig) {
    let dims = MeshDims::new(4, 4).unwrap();
    let targets = [1, 2, 3, 7, 11, 15];
    let slave = targets[hops - 1];
    let mut cfg = SimConfig::new(dims);
    let adr = 0x1000_0040;
    cfg.nodes[0] = NodeConfig::master(vec![WbOp::write(adr, 0xA5A5_0000 | hops as u32, 0xF)]);
    cfg.nodes[slave] = NodeConfig::slave(0);
    cfg.lut = vec![(1, slave)];
    let (out, _) = run_scenario(&cfg, RunOptions::default()).unwrap();
    let r = &out.report.records[0];
    assert_eq!(r.hops, hops);
    (r.latency().unwrap_or(u64::MAX), cfg)
}

fn checker_fault(fault: (usize, Fault)) -> Result<Vec<WbRule>, String> {
    let mut cfg = SimConfig::new(MeshDims::new(2, 2).unwrap());
    cfg.nodes[0] = NodeConfig::master(vec![
        WbOp::write(0x3000_0010, 0x1234_5678, 0xF),
        WbOp::read(0x3000_0010),
        WbOp::write(0x3000_0014, 0x9ABC_DEF0, 0xF),
    ]);
    cfg.nodes[3] = NodeConfig::slave(1);
    cfg.lut = vec![(3, 3)];
    let opts = RunOptions {
        faults: vec![fault],
        ..Default::default()
    };
    let (out, _) = run_scenario(&cfg, opts).map_err(|e| e.to_string())?;
    Ok(out.report.violations.iter().map(|(_, v)| v.rule).collect())
}

fn main() {
    let mut s = Suite {
        results: Vec::new(),
        replay: Vec::new(),
        audited: Vec::new(),
    };

    let v = criterion_route_oracle();
    s.report(1, "route oracle", v);

    // criterion 2
    let mut c2 = random_mesh(SEED, PAIRS_PER_MASTER, DropPolicy::Backpressure);
    c2.flow_control.timeout = BACKPRESSURE_TIMEOUT_PS;
    let r2 = run(&c2, retained());
    let v = coherence_verdict(&r2, &c2, Duration::from_secs(30));
    s.report(2, "end-to-end coherence", v);

    // criterion 4 uses the criterion 2 trace
    let v = check_tx_fsm(r2.out.trace.records(), &c2).and_then(|per| {
        let total: usize = per.values().sum();
        if total as u64 != r2.out.report.aggregate().issued {
            return Err(format!(
                "{total} conforming of {} issued",
                r2.out.report.aggregate().issued
            ));
        }
        Ok(format!(
            "{total} transactions over {} masters conform",
            per.len()
        ))
    });
    s.report(4, "transmit FSM conformance", v);
    s.keep("criterion 2", &c2, retained(), r2);

    // criterion 3
    let c3a = flood(DropPolicy::DropOnFull, 8);
    let r3a = run(&c3a, retained());
    let c3c = flood(DropPolicy::DropOnFull, 0);
    let r3c = run(&c3c, retained());
    let v = (|| {
        let a = r3a.out.report.aggregate();
        let c = r3c.out.report.aggregate();
        if a.drops == 0 {
            return Err("no drops under flooding".to_string());
        }
        if r3a.status != ExitStatus::Ok {
            return Err(format!("with retransmission: {}", r3a.status));
        }
        let rate = c.delivered as f64 / c.issued as f64;
        if rate >= 1.0 || r3c.status.code() != 2 {
            return Err(format!("without retransmission completion rate {rate:.3}"));
        }
        Ok(format!(
            "drops {}, retransmits {}, all {} complete; max_retries=0 completes {:.1}% ({} failed)",
            a.drops,
            a.retransmits,
            a.issued,
            100.0 * rate,
            c.failed
        ))
    })();
    s.report(3, "drop and retransmit", v);
    s.keep("criterion 3 retries", &c3a, retained(), r3a);
    s.keep("criterion 3 no retries", &c3c, retained(), r3c);

    // criterion 5
    let mut c5 = random_mesh(SEED, PAIRS_PER_MASTER, DropPolicy::Backpressure);
    c5.flow_control.timeout = BACKPRESSURE_TIMEOUT_PS;
    randomize_clocks(&mut c5, SEED, 37_000);
    let r5 = run(&c5, retained());
    let v = coherence_verdict(&r5, &c5, Duration::from_secs(30)).and_then(|d| {
        let synced = check_synchronizers(r5.out.trace.records(), &c5)?;
        check_tx_fsm(r5.out.trace.records(), &c5)?;
        Ok(format!("{d}; {synced} CI level changes synchronized"))
    });
    s.report(5, "GALS clocks", v);
    s.keep("criterion 5", &c5, retained(), r5);

    // criterion 9
    let mut latencies = Vec::new();
    for h in 1..=6 {
        let (lat, cfg) = latency_for_hops(h);
        latencies.push(lat);
        let r = run(&cfg, retained());
        if h == 6 {
            s.keep("criterion 9", &cfg, retained(), r);
        } else {
            s.audited.push(("criterion 9", r.out));
        }
    }
    let v =
        if latencies.windows(2).all(|w| w[0] <= w[1]) && latencies.iter().all(|l| *l != u64::MAX) {
            Ok(format!("latency ps by hops 1..6: {latencies:?}"))
        } else {
            Err(format!("latency ps by hops 1..6: {latencies:?}"))
        };
    s.report(9, "zero-load latency monotonic", v);

    // criterion 8
    let cases: [(&str, (usize, Fault), WbRule); 3] = [
        (
            "stb without cyc",
            (0, Fault::Master(MasterFault::StbWithoutCyc { edge: 0 })),
            WbRule::StbWithoutCyc,
        ),
        (
            "moved address",
            (0, Fault::Master(MasterFault::MoveAddress { txn: 1 })),
            WbRule::Unstable(wbnoc::wishbone::WbField::Address),
        ),
        (
            "spurious ack",
            (3, Fault::SpuriousSlaveAck { edge: 1 }),
            WbRule::AckWithoutStb,
        ),
    ];
    let mut details = Vec::new();
    let mut verdict = Ok(());
    for (name, fault, rule) in cases {
        match checker_fault(fault) {
            Ok(v) if v == [rule] => details.push(format!("{name} -> {rule}")),
            Ok(v) => verdict = Err(format!("{name} gave {v:?}")),
            Err(e) => verdict = Err(e),
        }
    }
    let v = verdict.map(|_| details.join(", "));
    s.report(8, "checker coverage", v);

    // criterion 6
    let v = (|| {
        let mut transfers = 0;
        for (label, out) in &s.audited {
            transfers +=
                check_handshakes(out.trace.records()).map_err(|e| format!("{label}: {e}"))?;
            check_non_interleaving(out.trace.records()).map_err(|e| format!("{label}: {e}"))?;
        }
        Ok(format!(
            "{transfers} four-phase transfers legal across {} runs",
            s.audited.len()
        ))
    })();
    s.report(6, "handshake legality", v);

    // criterion 7
    let v = (|| {
        for (label, cfg, opts, hash, csv) in &s.replay {
            let again = run(cfg, opts.clone());
            if again.out.report.trace_hash != *hash || again.csv != *csv {
                return Err(format!("{label} differs on replay"));
            }
            if rehash(again.out.trace.records()) != *hash {
                return Err(format!("{label}: trace digest does not match its records"));
            }
        }
        Ok(format!(
            "{} runs replayed with identical trace hash and CSV",
            s.replay.len()
        ))
    })();
    s.report(7, "determinism", v);

    let failed: Vec<u32> = s
        .results
        .iter()
        .filter(|(_, _, v)| v.is_err())
        .map(|(n, _, _)| *n)
        .collect();
    let completed: usize = s
        .audited
        .iter()
        .map(|(_, o)| {
            o.report
                .records
                .iter()
                .filter(|r| r.outcome == Outcome::Completed)
                .count()
        })
        .sum();
    println!(
        "acceptance: {} of {} criteria passed ({completed} transactions simulated)",
        s.results.len() - failed.len(),
        s.results.len()
    );
    if !failed.is_empty() {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
