// SPDX-License-Identifier: Apache-2.0

//! Per-run measurements and their CSV and summary renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::adapter::AdapterCounters;
use crate::kernel::SimTime;
use crate::router::RouterCounters;
use crate::wishbone::{SlaveMemory, Violation, WbOpKind};

pub const CSV_HEADER: &str =
    "txn_id,master,slave,kind,issued_ps,completed_ps,latency_ps,hops,retransmits,outcome";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    InFlight,
    Completed,
    Failed,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::InFlight => "in-flight",
            Outcome::Completed => "completed",
            Outcome::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxnRecord {
    pub master: usize,
    /// Target slave node, `None` when the address prefix was unmapped.
    pub slave: Option<usize>,
    pub kind: WbOpKind,
    pub adr: u32,
    /// Written data for writes, returned data for completed reads.
    pub data: u32,
    pub issued_at: SimTime,
    pub completed_at: Option<SimTime>,
    pub retransmits: u32,
    pub hops: usize,
    pub outcome: Outcome,
}

impl TxnRecord {
    pub fn latency(&self) -> Option<u64> {
        match self.outcome {
            Outcome::Completed => self.completed_at.map(|c| c - self.issued_at),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatEvent {
    Injection {
        master: usize,
        txn: u64,
        slave: Option<usize>,
        kind: WbOpKind,
        adr: u32,
        data: u32,
        hops: usize,
        at: SimTime,
    },
    Delivery {
        master: usize,
        txn: u64,
        data: u32,
        retransmits: u32,
        at: SimTime,
    },
    Failure {
        master: usize,
        txn: u64,
        retransmits: u32,
        at: SimTime,
    },
    Drop {
        node: usize,
    },
    Retransmit {
        master: usize,
        txn: u64,
    },
    Violation {
        node: usize,
        violation: Violation,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("delivery for master {master} txn {txn} without a matching injection")]
    UnknownTxn { master: usize, txn: u64 },
    #[error("master {master} txn {txn} injected twice")]
    DuplicateTxn { master: usize, txn: u64 },
    #[error("master {master} txn {txn} already finished")]
    AlreadyFinished { master: usize, txn: u64 },
}

/// Packet-level accounting across the whole network.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PacketTotals {
    pub injected: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub malformed: u64,
}

impl PacketTotals {
    pub fn in_flight(&self) -> u64 {
        self.injected - self.delivered - self.dropped - self.malformed
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Aggregate {
    pub issued: u64,
    pub delivered: u64,
    pub failed: u64,
    pub drops: u64,
    pub retransmits: u64,
    pub violations: u64,
    pub mean_latency_ps: f64,
    pub median_latency_ps: u64,
    pub max_latency_ps: u64,
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub records: Vec<TxnRecord>,
    index: BTreeMap<(usize, u64), usize>,
    /// Counters for every router, by node index.
    pub routers: Vec<RouterCounters>,
    /// Counters for every node that has an adapter.
    pub adapters: BTreeMap<usize, AdapterCounters>,
    pub violations: Vec<(usize, Violation)>,
    pub drops: u64,
    pub retransmits: u64,
    pub packets: PacketTotals,
    /// Stale and spurious responses seen by the flow-control engines.
    pub stale_responses: u64,
    pub slave_memories: BTreeMap<usize, SlaveMemory>,
    pub trace_hash: u64,
    pub trace_records: u64,
    pub end_time: SimTime,
    pub events_fired: u64,
}

impl RunReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, event: StatEvent) -> Result<(), StatsError> {
        match event {
            StatEvent::Injection {
                master,
                txn,
                slave,
                kind,
                adr,
                data,
                hops,
                at,
            } => {
                if self.index.contains_key(&(master, txn)) {
                    return Err(StatsError::DuplicateTxn { master, txn });
                }
                self.index.insert((master, txn), self.records.len());
                self.records.push(TxnRecord {
                    master,
                    slave,
                    kind,
                    adr,
                    data,
                    issued_at: at,
                    completed_at: None,
                    retransmits: 0,
                    hops,
                    outcome: Outcome::InFlight,
                });
            }
            StatEvent::Delivery {
                master,
                txn,
                data,
                retransmits,
                at,
            } => {
                let r = self.open_record(master, txn)?;
                r.outcome = Outcome::Completed;
                r.completed_at = Some(at);
                r.retransmits = retransmits;
                if r.kind == WbOpKind::Read {
                    r.data = data;
                }
            }
            StatEvent::Failure {
                master,
                txn,
                retransmits,
                at,
            } => {
                let r = self.open_record(master, txn)?;
                r.outcome = Outcome::Failed;
                r.completed_at = Some(at);
                r.retransmits = retransmits;
            }
            StatEvent::Drop { .. } => self.drops += 1,
            StatEvent::Retransmit { master, txn } => {
                if !self.index.contains_key(&(master, txn)) {
                    return Err(StatsError::UnknownTxn { master, txn });
                }
                self.retransmits += 1;
            }
            StatEvent::Violation { node, violation } => self.violations.push((node, violation)),
        }
        Ok(())
    }

    fn open_record(&mut self, master: usize, txn: u64) -> Result<&mut TxnRecord, StatsError> {
        let i = *self
            .index
            .get(&(master, txn))
            .ok_or(StatsError::UnknownTxn { master, txn })?;
        let r = &mut self.records[i];
        if r.outcome != Outcome::InFlight {
            return Err(StatsError::AlreadyFinished { master, txn });
        }
        Ok(r)
    }

    pub fn failed(&self) -> u64 {
        self.count(Outcome::Failed)
    }

    pub fn delivered(&self) -> u64 {
        self.count(Outcome::Completed)
    }

    fn count(&self, o: Outcome) -> u64 {
        self.records.iter().filter(|r| r.outcome == o).count() as u64
    }

    pub fn aggregate(&self) -> Aggregate {
        let mut lat: Vec<u64> = self.records.iter().filter_map(TxnRecord::latency).collect();
        lat.sort_unstable();
        let mean = if lat.is_empty() {
            0.0
        } else {
            lat.iter().sum::<u64>() as f64 / lat.len() as f64
        };
        Aggregate {
            issued: self.records.len() as u64,
            delivered: self.delivered(),
            failed: self.failed(),
            drops: self.drops,
            retransmits: self.retransmits,
            violations: self.violations.len() as u64,
            mean_latency_ps: mean,
            median_latency_ps: lat
                .get(lat.len().saturating_sub(1) / 2)
                .copied()
                .unwrap_or(0),
            max_latency_ps: lat.last().copied().unwrap_or(0),
        }
    }

    /// One row per transaction in issue order.
    pub fn emit_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for (id, r) in self.records.iter().enumerate() {
            let slave = r.slave.map(|s| s.to_string()).unwrap_or_default();
            let (completed, latency) = match r.latency() {
                Some(l) => (r.completed_at.unwrap().0.to_string(), l.to_string()),
                None => (String::new(), String::new()),
            };
            writeln!(
                out,
                "{id},{},{slave},{},{},{completed},{latency},{},{},{}",
                r.master,
                r.kind.as_str(),
                r.issued_at.0,
                r.hops,
                r.retransmits,
                r.outcome.as_str()
            )
            .unwrap();
        }
        out
    }

    /// `key: value` lines.
    pub fn summary(&self) -> String {
        let a = self.aggregate();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k}: {v}").unwrap();
        kv("issued", a.issued.to_string());
        kv("delivered", a.delivered.to_string());
        kv("failed", a.failed.to_string());
        kv("drops", a.drops.to_string());
        kv("retransmits", a.retransmits.to_string());
        kv("violations", a.violations.to_string());
        kv("mean_latency_ps", format!("{:.1}", a.mean_latency_ps));
        kv("median_latency_ps", a.median_latency_ps.to_string());
        kv("max_latency_ps", a.max_latency_ps.to_string());
        kv("packets_injected", self.packets.injected.to_string());
        kv("packets_delivered", self.packets.delivered.to_string());
        kv("packets_dropped", self.packets.dropped.to_string());
        kv("packets_malformed", self.packets.malformed.to_string());
        kv("stale_responses", self.stale_responses.to_string());
        kv("end_time_ps", self.end_time.0.to_string());
        kv("events", self.events_fired.to_string());
        kv("trace_hash", format!("{:016x}", self.trace_hash));
        s
    }
}
