// SPDX-License-Identifier: Apache-2.0

//! Scenario builders and trace checks shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wbnoc::adapter::{audit_channel, HandshakeEdge, NaFsmState};
use wbnoc::config::{NodeConfig, NodeRole, SimConfig};
use wbnoc::kernel::{ClockDomain, DomainId, SimTime, TraceRecord};
use wbnoc::stats::{Outcome, RunReport};
use wbnoc::wishbone::{MasterWorkload, WorkloadMode};
use wbnoc::{DropPolicy, MeshDims, WbOpKind};

/// 4×4 mesh with eight masters and eight slaves placed by `seed`, each
/// master running `pairs` random write-then-read pairs over all slaves.
pub fn random_mesh(seed: u64, pairs: usize, policy: DropPolicy) -> SimConfig {
    let mut cfg = SimConfig::new(MeshDims::new(4, 4).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..16).collect();
    order.shuffle(&mut rng);
    let (masters, slaves) = order.split_at(8);
    for (p, &s) in slaves.iter().enumerate() {
        cfg.nodes[s] = NodeConfig::slave(rng.gen_range(0..3));
        cfg.lut.push((p as u8, s));
    }
    for &m in masters {
        cfg.nodes[m] = NodeConfig {
            role: NodeRole::Master,
            workload: MasterWorkload {
                ops: Vec::new(),
                mode: WorkloadMode::RandomUniform {
                    count: pairs,
                    seed,
                    slaves: slaves.to_vec(),
                },
            },
            ..NodeConfig::idle()
        };
    }
    cfg.router.drop_policy = policy;
    cfg.seed = seed;
    cfg
}

/// Gives slaves `slave_period` and every node a random phase.
pub fn randomize_clocks(cfg: &mut SimConfig, seed: u64, slave_period: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC10C);
    for n in &mut cfg.nodes {
        if n.role == NodeRole::Slave {
            n.period_ps = slave_period;
        }
        n.phase_ps = rng.gen_range(0..n.period_ps);
    }
}

/// Every read returns the value of the last completed write to its address
/// by the same master. Masters own disjoint address windows.
pub fn check_coherence(report: &RunReport) -> Result<usize, String> {
    let mut last: BTreeMap<u32, u32> = BTreeMap::new();
    let mut reads = 0;
    let mut by_master: BTreeMap<usize, Vec<_>> = BTreeMap::new();
    for r in &report.records {
        by_master.entry(r.master).or_default().push(r);
    }
    for recs in by_master.values() {
        for r in recs {
            if r.outcome != Outcome::Completed {
                return Err(format!(
                    "master {} txn at {} did not complete",
                    r.master, r.issued_at
                ));
            }
            match r.kind {
                WbOpKind::Write => {
                    last.insert(r.adr, r.data);
                }
                WbOpKind::Read => {
                    reads += 1;
                    let want = last.get(&r.adr).copied().unwrap_or(0);
                    if r.data != want {
                        return Err(format!(
                            "read {:#010x} by master {} returned {:#010x}, expected {want:#010x}",
                            r.adr, r.master, r.data
                        ));
                    }
                }
            }
        }
    }
    Ok(reads)
}

/// Final slave memories equal a replay of every completed write in
/// completion order.
pub fn check_memory_replay(report: &RunReport, cfg: &SimConfig) -> Result<(), String> {
    let mut writes: Vec<_> = report
        .records
        .iter()
        .filter(|r| r.kind == WbOpKind::Write && r.outcome == Outcome::Completed)
        .collect();
    writes.sort_by_key(|r| r.completed_at);
    let mut expect: BTreeMap<usize, BTreeMap<u32, u32>> = BTreeMap::new();
    for w in writes {
        let slave = w.slave.ok_or("write without slave")?;
        expect.entry(slave).or_default().insert(w.adr & !3, w.data);
    }
    for s in cfg.slaves() {
        let got = &report.slave_memories[&s].words;
        let want = expect.remove(&s).unwrap_or_default();
        if *got != want {
            return Err(format!("slave {s} memory differs from the replay"));
        }
    }
    Ok(())
}

pub fn by_component(records: &[TraceRecord]) -> BTreeMap<&str, Vec<&TraceRecord>> {
    let mut m: BTreeMap<&str, Vec<&TraceRecord>> = BTreeMap::new();
    for r in records {
        m.entry(r.component.as_str()).or_default().push(r);
    }
    m
}

fn is_channel(component: &str) -> bool {
    component.ends_with(".ni")
        || component.contains(".out.")
        || component.ends_with(".citx")
        || component.ends_with(".cirx")
}

/// Audits every four-phase channel in the trace. Returns the number of
/// complete transfers.
pub fn check_handshakes(records: &[TraceRecord]) -> Result<usize, String> {
    let mut total = 0;
    for (comp, recs) in by_component(records) {
        if !is_channel(comp) {
            continue;
        }
        let edges: Vec<(SimTime, HandshakeEdge)> = recs
            .iter()
            .filter(|r| r.kind.as_str() == "handshake-edge")
            .map(|r| {
                let sig = r.field("sig").unwrap();
                let level = r.field("level").unwrap() == "1";
                (r.time, HandshakeEdge::from_signal(sig, level).unwrap())
            })
            .collect();
        total += audit_channel(&edges).map_err(|e| format!("{comp}: {e}"))?;
    }
    Ok(total)
}

/// Flits on every network channel come in whole Head, Body×3, Tail packets.
pub fn check_non_interleaving(records: &[TraceRecord]) -> Result<usize, String> {
    let mut packets = 0;
    for (comp, recs) in by_component(records) {
        let kinds: Vec<&str> = recs
            .iter()
            .filter(|r| r.kind.as_str() == "flit-transfer")
            .map(|r| r.field("flit").unwrap())
            .collect();
        for (i, k) in kinds.iter().enumerate() {
            let want = match i % 5 {
                0 => "head",
                4 => "tail",
                _ => "body",
            };
            if *k != want {
                return Err(format!("{comp}: flit {i} is {k}, expected {want}"));
            }
        }
        packets += kinds.len() / 5;
    }
    Ok(packets)
}

fn parse_state(s: &str) -> NaFsmState {
    NaFsmState::parse(s).unwrap()
}

/// Master transmit units follow Wait StorePacket RouteLookup Req+ Ack+ Wait
/// with exactly one clock period in StorePacket and in RouteLookup. Returns
/// the number of conforming transactions per master.
pub fn check_tx_fsm(
    records: &[TraceRecord],
    cfg: &SimConfig,
) -> Result<BTreeMap<usize, usize>, String> {
    use NaFsmState::*;
    let mut out = BTreeMap::new();
    for m in cfg.masters() {
        let period = cfg.nodes[m].period_ps;
        let comp = format!("n{m}.mtx");
        let steps: Vec<(SimTime, NaFsmState, NaFsmState)> = records
            .iter()
            .filter(|r| r.component == comp)
            .map(|r| {
                (
                    r.time,
                    parse_state(r.field("from").unwrap()),
                    parse_state(r.field("to").unwrap()),
                )
            })
            .collect();
        if !steps.len().is_multiple_of(5) {
            return Err(format!(
                "{comp}: {} transitions is not whole transactions",
                steps.len()
            ));
        }
        for t in steps.chunks(5) {
            let path: Vec<_> = t.iter().map(|s| (s.1, s.2)).collect();
            let want = [
                (Wait, StorePacket),
                (StorePacket, RouteLookup),
                (RouteLookup, Req),
                (Req, Ack),
                (Ack, Wait),
            ];
            if path != want {
                return Err(format!("{comp}: path {path:?} at {}", t[0].0));
            }
            if t[1].0 - t[0].0 != period || t[2].0 - t[1].0 != period {
                return Err(format!(
                    "{comp}: StorePacket/RouteLookup not one cycle at {}",
                    t[0].0
                ));
            }
            if t[3].0 - t[2].0 < period || t[4].0 - t[3].0 < period {
                return Err(format!(
                    "{comp}: Req or Ack shorter than a cycle at {}",
                    t[0].0
                ));
            }
        }
        out.insert(m, steps.len() / 5);
    }
    Ok(out)
}

/// Every level the NI drives into a CI shows up exactly once, in order, in
/// the CI's synchronized view, two CI edges after the change (one edge more
/// for each earlier change still in the synchronizer).
pub fn check_synchronizers(records: &[TraceRecord], cfg: &SimConfig) -> Result<usize, String> {
    let comps = by_component(records);
    let mut checked = 0;
    for (i, n) in cfg.nodes.iter().enumerate() {
        if n.role == NodeRole::Idle {
            continue;
        }
        let dom = ClockDomain::new(DomainId(0), n.period_ps, n.phase_ps).unwrap();
        for (ch, sig) in [("citx", "ack"), ("cirx", "req")] {
            let raw: VecDeque<(SimTime, bool)> = comps
                .get(format!("n{i}.{ch}").as_str())
                .into_iter()
                .flatten()
                .filter(|r| r.field("sig") == Some(sig))
                .map(|r| (r.time, r.field("level") == Some("1")))
                .collect();
            let seen: Vec<(SimTime, bool, SimTime)> = comps
                .get(format!("n{i}.{ch}.sync").as_str())
                .into_iter()
                .flatten()
                .map(|r| {
                    let changed = SimTime(r.field("changed").unwrap().parse().unwrap());
                    (r.time, r.field("level") == Some("1"), changed)
                })
                .collect();
            let tail_pending = raw.len().saturating_sub(seen.len());
            if tail_pending > 2 {
                return Err(format!(
                    "n{i}.{ch}: {} raw changes never observed",
                    tail_pending
                ));
            }
            let mut prev: Option<SimTime> = None;
            for ((t_raw, level), (observed, s_level, changed)) in raw.iter().zip(&seen) {
                if level != s_level || t_raw != changed {
                    return Err(format!(
                        "n{i}.{ch}: observation at {observed} does not match change at {t_raw}"
                    ));
                }
                let two_edges = dom.next_edge(dom.next_edge(*t_raw));
                let want = match prev {
                    Some(p) if two_edges <= p => dom.next_edge(p),
                    _ => two_edges,
                };
                if *observed != want {
                    return Err(format!(
                        "n{i}.{ch}: change at {t_raw} observed at {observed}, expected {want}"
                    ));
                }
                prev = Some(*observed);
                checked += 1;
            }
        }
    }
    Ok(checked)
}

/// FNV-1a over the retained trace, recomputed independently.
pub fn rehash(records: &[TraceRecord]) -> u64 {
    let lines: Vec<String> = records.iter().map(|r| r.to_string()).collect();
    wbnoc::kernel::trace_digest(lines.iter().map(String::as_str))
}

/// Shortest hop count on the mesh graph by breadth-first search.
pub fn bfs_hops(dims: MeshDims, src: usize, dst: usize) -> usize {
    let n = dims.node_count();
    let mut dist = vec![usize::MAX; n];
    let mut q = VecDeque::from([src]);
    dist[src] = 0;
    while let Some(u) = q.pop_front() {
        let (x, y) = (u % dims.cols(), u / dims.cols());
        let mut next = Vec::new();
        if x > 0 {
            next.push(u - 1);
        }
        if x + 1 < dims.cols() {
            next.push(u + 1);
        }
        if y > 0 {
            next.push(u - dims.cols());
        }
        if y + 1 < dims.rows() {
            next.push(u + dims.cols());
        }
        for v in next {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
    }
    dist[dst]
}

pub fn retained() -> wbnoc::RunOptions {
    wbnoc::RunOptions {
        retain_trace: true,
        ..Default::default()
    }
}
