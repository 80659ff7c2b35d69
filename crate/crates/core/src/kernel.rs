// SPDX-License-Identifier: Apache-2.0

//! Discrete-event kernel: integer picosecond time, an ordered event queue,
//! clock domains, the two-flop synchronizer latency model and the run trace.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::hash::Hasher;
use std::io::{self, Write};
use std::ops::{Add, Sub};

use fnv::FnvHasher;
use thiserror::Error;

/// Simulated time in picoseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn ps(self) -> u64 {
        self.0
    }

    pub const fn from_ns(ns: u64) -> SimTime {
        SimTime(ns * 1_000)
    }
}

impl Add<u64> for SimTime {
    type Output = SimTime;

    fn add(self, rhs: u64) -> SimTime {
        SimTime(self.0.checked_add(rhs).expect("simulation time overflow"))
    }
}

impl Sub for SimTime {
    type Output = u64;

    fn sub(self, rhs: SimTime) -> u64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("event scheduled in the past: fire_at={fire_at} ps, now={now} ps")]
    InPast { fire_at: SimTime, now: SimTime },
    #[error("clock period must be positive")]
    ZeroPeriod,
    #[error("clock phase {phase} ps must be smaller than the period {period} ps")]
    PhaseOutOfRange { phase: u64, period: u64 },
}

/// Identifies the component an event is addressed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduledEvent<E> {
    pub fire_at: SimTime,
    pub seq: u64,
    pub target: ComponentId,
    pub payload: E,
}

/// Handle returned by [`Scheduler::schedule`], usable for cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle {
    fire_at: SimTime,
    seq: u64,
}

/// Future event set. Events fire in `(fire_at, seq)` order, so equal-time
/// events fire in insertion order.
#[derive(Debug)]
pub struct Scheduler<E> {
    now: SimTime,
    next_seq: u64,
    queue: BTreeMap<(SimTime, u64), (ComponentId, E)>,
    fired: u64,
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Scheduler {
            now: SimTime::ZERO,
            next_seq: 0,
            queue: BTreeMap::new(),
            fired: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Total events fired since construction.
    pub fn fired(&self) -> u64 {
        self.fired
    }

    pub fn schedule(
        &mut self,
        fire_at: SimTime,
        target: ComponentId,
        payload: E,
    ) -> Result<EventHandle, KernelError> {
        if fire_at < self.now {
            return Err(KernelError::InPast {
                fire_at,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.insert((fire_at, seq), (target, payload));
        Ok(EventHandle { fire_at, seq })
    }

    /// Removes a queued event. Returns false if it already fired or was
    /// cancelled before.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        self.queue.remove(&(handle.fire_at, handle.seq)).is_some()
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.queue.keys().next().map(|(t, _)| *t)
    }

    /// Pops the next event if it fires at or before `t_end`, advancing `now`.
    pub fn pop_until(&mut self, t_end: SimTime) -> Option<ScheduledEvent<E>> {
        let entry = self.queue.first_entry()?;
        if entry.key().0 > t_end {
            return None;
        }
        let ((fire_at, seq), (target, payload)) = entry.remove_entry();
        self.now = fire_at;
        self.fired += 1;
        Some(ScheduledEvent {
            fire_at,
            seq,
            target,
            payload,
        })
    }

    /// Fires every event with `fire_at <= t_end` in order. The handler may
    /// schedule further events; those are fired too if they fall inside the
    /// window. Returns the number of events fired.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> u64
    where
        F: FnMut(&mut Self, ScheduledEvent<E>),
    {
        let mut count = 0;
        while let Some(ev) = self.pop_until(t_end) {
            handler(self, ev);
            count += 1;
        }
        count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DomainId(pub u16);

/// A synchronous clock island. Rising edges sit at `phase + k * period`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClockDomain {
    pub id: DomainId,
    period: u64,
    phase: u64,
}

/// 25 MHz.
pub const DEFAULT_PERIOD_PS: u64 = 40_000;

impl ClockDomain {
    pub fn new(id: DomainId, period: u64, phase: u64) -> Result<Self, KernelError> {
        if period == 0 {
            return Err(KernelError::ZeroPeriod);
        }
        if phase >= period {
            return Err(KernelError::PhaseOutOfRange { phase, period });
        }
        Ok(ClockDomain { id, period, phase })
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn phase(&self) -> u64 {
        self.phase
    }

    pub fn first_edge(&self) -> SimTime {
        SimTime(self.phase)
    }

    /// Smallest rising edge strictly after `after`.
    pub fn next_edge(&self, after: SimTime) -> SimTime {
        if after.0 < self.phase {
            return SimTime(self.phase);
        }
        let k = (after.0 - self.phase) / self.period + 1;
        SimTime(self.phase + k * self.period)
    }

    pub fn is_edge(&self, t: SimTime) -> bool {
        t.0 >= self.phase && (t.0 - self.phase).is_multiple_of(self.period)
    }
}

/// Time at which `dest` observes a level change made at `changed_at`: the
/// second rising edge strictly after the change.
pub fn cdc_synchronize(dest: &ClockDomain, changed_at: SimTime) -> SimTime {
    dest.next_edge(dest.next_edge(changed_at))
}

/// A level crossing into a clock domain through a two-flop synchronizer.
///
/// Changes that would land on an edge already used by an earlier change are
/// pushed to the following edge so that every input change yields exactly
/// one observed change, in order.
#[derive(Debug, Clone)]
pub struct Synchronizer {
    dest: ClockDomain,
    input: bool,
    output: bool,
    last_observed: Option<SimTime>,
    pending: VecDeque<SyncChange>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyncChange {
    pub level: bool,
    pub changed_at: SimTime,
    pub observed_at: SimTime,
}

impl Synchronizer {
    pub fn new(dest: ClockDomain) -> Self {
        Synchronizer {
            dest,
            input: false,
            output: false,
            last_observed: None,
            pending: VecDeque::new(),
        }
    }

    pub fn domain(&self) -> &ClockDomain {
        &self.dest
    }

    /// Registers a new input level. Returns the observation time, or `None`
    /// when the level did not change.
    pub fn drive(&mut self, level: bool, changed_at: SimTime) -> Option<SimTime> {
        if level == self.input {
            return None;
        }
        self.input = level;
        let mut observed_at = cdc_synchronize(&self.dest, changed_at);
        if let Some(last) = self.last_observed {
            if observed_at <= last {
                observed_at = self.dest.next_edge(last);
            }
        }
        self.last_observed = Some(observed_at);
        self.pending.push_back(SyncChange {
            level,
            changed_at,
            observed_at,
        });
        Some(observed_at)
    }

    /// Advances the output to `now` and returns the changes that became
    /// visible.
    pub fn sample(&mut self, now: SimTime) -> Vec<SyncChange> {
        let mut seen = Vec::new();
        while let Some(front) = self.pending.front() {
            if front.observed_at > now {
                break;
            }
            let change = self.pending.pop_front().unwrap();
            self.output = change.level;
            seen.push(change);
        }
        seen
    }

    pub fn level(&self) -> bool {
        self.output
    }

    pub fn is_settled(&self) -> bool {
        self.pending.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceKind {
    StateChange,
    FlitTransfer,
    HandshakeEdge,
    WbEdge,
    Drop,
    Retransmit,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::StateChange => "state-change",
            TraceKind::FlitTransfer => "flit-transfer",
            TraceKind::HandshakeEdge => "handshake-edge",
            TraceKind::WbEdge => "wb-edge",
            TraceKind::Drop => "drop",
            TraceKind::Retransmit => "retransmit",
        }
    }

    pub fn parse(s: &str) -> Option<TraceKind> {
        Some(match s {
            "state-change" => TraceKind::StateChange,
            "flit-transfer" => TraceKind::FlitTransfer,
            "handshake-edge" => TraceKind::HandshakeEdge,
            "wb-edge" => TraceKind::WbEdge,
            "drop" => TraceKind::Drop,
            "retransmit" => TraceKind::Retransmit,
            _ => return None,
        })
    }
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub component: String,
    pub kind: TraceKind,
    /// Space separated `key=value` pairs.
    pub detail: String,
}

impl TraceRecord {
    pub fn field(&self, key: &str) -> Option<&str> {
        self.detail.split(' ').find_map(|kv| {
            let (k, v) = kv.split_once('=')?;
            (k == key).then_some(v)
        })
    }

    /// Parses one line of the tab-separated dump format.
    pub fn parse_line(line: &str) -> Option<TraceRecord> {
        let mut it = line.splitn(4, '\t');
        let time = SimTime(it.next()?.parse().ok()?);
        let component = it.next()?.to_string();
        let kind = TraceKind::parse(it.next()?)?;
        let detail = it.next().unwrap_or("").to_string();
        Some(TraceRecord {
            time,
            component,
            kind,
            detail,
        })
    }
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.time, self.component, self.kind, self.detail
        )
    }
}

/// Append-only run trace. The FNV-1a digest over the canonical line encoding
/// is always maintained; the records themselves are kept only on request.
#[derive(Debug, Clone)]
pub struct Trace {
    retain: bool,
    records: Vec<TraceRecord>,
    hash: u64,
    len: u64,
    last_time: SimTime,
}

impl Trace {
    pub fn new(retain: bool) -> Self {
        Trace {
            retain,
            records: Vec::new(),
            hash: FnvHasher::default().finish(),
            len: 0,
            last_time: SimTime::ZERO,
        }
    }

    pub fn push(
        &mut self,
        time: SimTime,
        component: impl Into<String>,
        kind: TraceKind,
        detail: impl Into<String>,
    ) {
        debug_assert!(time >= self.last_time, "trace out of order");
        self.last_time = time;
        let record = TraceRecord {
            time,
            component: component.into(),
            kind,
            detail: detail.into(),
        };
        let mut h = FnvHasher::with_key(self.hash);
        h.write(record.to_string().as_bytes());
        h.write(b"\n");
        self.hash = h.finish();
        self.len += 1;
        if self.retain {
            self.records.push(record);
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn hash(&self) -> u64 {
        self.hash
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            writeln!(w, "{r}")?;
        }
        Ok(())
    }
}

/// FNV-1a digest of a dumped trace, matching [`Trace::hash`].
pub fn trace_digest<'a>(lines: impl IntoIterator<Item = &'a str>) -> u64 {
    let mut h = FnvHasher::default();
    for line in lines {
        h.write(line.as_bytes());
        h.write(b"\n");
    }
    h.finish()
}
