// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::flow::{FcAction, FcEvent, FlowControlConfig, FlowControlState};
use super::{sel_mask, WbOp, WbOpKind, WbSignals};
use crate::kernel::SimTime;
use crate::packet::Status;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WorkloadMode {
    Scripted,
    /// `count` write-then-read pairs, each to a random word of a random slave
    /// from `slaves`, inside an address window private to the master.
    RandomUniform {
        count: usize,
        seed: u64,
        slaves: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MasterWorkload {
    pub ops: Vec<WbOp>,
    pub mode: WorkloadMode,
}

/// Words per master window in random workloads.
const RANDOM_WINDOW_WORDS: u32 = 16;

impl MasterWorkload {
    pub fn scripted(ops: Vec<WbOp>) -> Self {
        MasterWorkload {
            ops,
            mode: WorkloadMode::Scripted,
        }
    }

    /// The concrete op sequence. `prefix_of` maps a slave node to the
    /// address prefix that reaches it.
    pub fn materialize(&self, master: usize, prefix_of: impl Fn(usize) -> Option<u8>) -> Vec<WbOp> {
        match &self.mode {
            WorkloadMode::Scripted => self.ops.clone(),
            WorkloadMode::RandomUniform {
                count,
                seed,
                slaves,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    seed ^ (master as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                );
                let mut ops = Vec::with_capacity(2 * count);
                for _ in 0..*count {
                    let slave = slaves[rng.gen_range(0..slaves.len())];
                    let prefix = prefix_of(slave).expect("slave reachable through the lut") as u32;
                    let word = rng.gen_range(0..RANDOM_WINDOW_WORDS);
                    let adr = (prefix << 28) | ((master as u32) << 12) | (word << 2);
                    let data: u32 = rng.gen();
                    ops.push(WbOp::write(adr, data, 0xF));
                    ops.push(WbOp::read(adr));
                }
                ops
            }
        }
    }
}

/// Fault-injection hooks for checker coverage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MasterFault {
    /// Drive STB without CYC for one edge at this edge index, if idle.
    StbWithoutCyc { edge: u64 },
    /// Move the address one edge after the cycle of transaction `txn` starts.
    MoveAddress { txn: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoreEvent {
    Issued {
        txn: u64,
        op: WbOp,
        tag: u8,
    },
    Reissued {
        txn: u64,
        tag: u8,
    },
    Completed {
        txn: u64,
        op: WbOp,
        data: u32,
        retransmits: u32,
    },
    Failed {
        txn: u64,
        op: WbOp,
        retransmits: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Current {
    txn: u64,
    op: WbOp,
    tag: u8,
    retransmits: u32,
    asserted_at_edge: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    Active,
    /// Cycle dropped for one edge ahead of a retransmission.
    Reissue,
}

/// Master core bus-functional model. It runs the workload one classic cycle
/// at a time and owns the flow-control engine.
#[derive(Debug, Clone)]
pub struct MasterCore {
    ops: Vec<WbOp>,
    next_op: usize,
    out: WbSignals,
    phase: Phase,
    current: Option<Current>,
    next_tag: u8,
    flow: FlowControlState,
    retransmit_pending: bool,
    fail_pending: bool,
    completion_pending: Option<u32>,
    edges: u64,
    faults: Vec<MasterFault>,
}

impl MasterCore {
    pub fn new(ops: Vec<WbOp>, flow: FlowControlConfig) -> Self {
        MasterCore {
            ops,
            next_op: 0,
            out: WbSignals::default(),
            phase: Phase::Idle,
            current: None,
            next_tag: 0,
            flow: FlowControlState::new(flow),
            retransmit_pending: false,
            fail_pending: false,
            completion_pending: None,
            edges: 0,
            faults: Vec::new(),
        }
    }

    pub fn inject(&mut self, fault: MasterFault) {
        self.faults.push(fault);
    }

    /// Master-driven half of the bus.
    pub fn outputs(&self) -> WbSignals {
        self.out
    }

    pub fn flow(&self) -> &FlowControlState {
        &self.flow
    }

    pub fn is_done(&self) -> bool {
        self.next_op >= self.ops.len() && self.current.is_none()
    }

    pub fn op_count(&self) -> usize {
        self.ops.len()
    }

    /// One rising edge. `inputs` are the adapter's registered ack, data and
    /// error from the previous edge.
    pub fn edge(&mut self, now: SimTime, inputs: &WbSignals) -> Vec<CoreEvent> {
        let mut events = Vec::new();
        let edge = self.edges;
        self.edges += 1;

        if self.phase == Phase::Active {
            let cur = self.current.expect("active cycle has a transaction");
            if inputs.ack {
                let action = self
                    .flow
                    .step(FcEvent::Response { tag: cur.tag })
                    .expect("response never errors");
                debug_assert_eq!(action, FcAction::Complete);
                events.push(self.finish(Some(inputs.dat_r)));
            } else if inputs.err {
                self.flow.abandon();
                events.push(self.finish(None));
            } else if self.fail_pending {
                events.push(self.finish(None));
            } else if self.retransmit_pending {
                self.retransmit_pending = false;
                self.drop_cycle();
                self.phase = Phase::Reissue;
            } else {
                for f in &self.faults {
                    if *f == (MasterFault::MoveAddress { txn: cur.txn })
                        && edge == cur.asserted_at_edge + 1
                    {
                        self.out.adr ^= 0x4;
                    }
                }
            }
            return events;
        }

        if let Some(data) = self.completion_pending.take() {
            events.push(self.finish(Some(data)));
            return events;
        }
        if self.fail_pending {
            events.push(self.finish(None));
            return events;
        }
        if self.phase == Phase::Reissue {
            let mut cur = self.current.expect("reissue keeps its transaction");
            cur.retransmits += 1;
            cur.asserted_at_edge = edge;
            self.current = Some(cur);
            self.drive(cur.op, cur.tag);
            self.phase = Phase::Active;
            events.push(CoreEvent::Reissued {
                txn: cur.txn,
                tag: cur.tag,
            });
            return events;
        }

        // idle: a stray strobe fault first, then the next op
        if self.out.stb {
            self.out.stb = false;
            return events;
        }
        if self.faults.contains(&MasterFault::StbWithoutCyc { edge }) {
            self.out.stb = true;
            return events;
        }
        if let Some(&op) = self.ops.get(self.next_op) {
            let txn = self.next_op as u64;
            self.next_op += 1;
            let tag = self.next_tag;
            self.next_tag = self.next_tag.wrapping_add(1);
            self.flow
                .step(FcEvent::Sent { tag, op, at: now })
                .expect("one cycle at a time");
            self.current = Some(Current {
                txn,
                op,
                tag,
                retransmits: 0,
                asserted_at_edge: edge,
            });
            self.drive(op, tag);
            self.phase = Phase::Active;
            events.push(CoreEvent::Issued { txn, op, tag });
        }
        events
    }

    fn drive(&mut self, op: WbOp, tag: u8) {
        self.out = WbSignals {
            cyc: true,
            stb: true,
            we: op.kind == WbOpKind::Write,
            adr: op.adr,
            dat_w: if op.kind == WbOpKind::Write {
                op.data
            } else {
                0
            },
            sel: op.sel,
            tgc: tag,
            ..WbSignals::default()
        };
    }

    fn drop_cycle(&mut self) {
        self.out = WbSignals::default();
    }

    fn finish(&mut self, data: Option<u32>) -> CoreEvent {
        let cur = self.current.take().expect("finishing a transaction");
        self.drop_cycle();
        self.phase = Phase::Idle;
        self.retransmit_pending = false;
        self.fail_pending = false;
        self.completion_pending = None;
        match data {
            Some(data) => CoreEvent::Completed {
                txn: cur.txn,
                op: cur.op,
                data,
                retransmits: cur.retransmits,
            },
            None => CoreEvent::Failed {
                txn: cur.txn,
                op: cur.op,
                retransmits: cur.retransmits,
            },
        }
    }

    /// Retransmission timer expiry.
    pub fn on_timer(&mut self) -> FcAction {
        let action = self.flow.step(FcEvent::Timer).expect("timer never errors");
        match action {
            FcAction::Retransmit => self.retransmit_pending = true,
            FcAction::Fail => self.fail_pending = true,
            _ => {}
        }
        action
    }

    /// A response the adapter could not hand over as a bus ack because no
    /// matching cycle was active.
    pub fn on_network_response(&mut self, tag: u8, data: u32, _status: Status) -> FcAction {
        let action = self
            .flow
            .step(FcEvent::Response { tag })
            .expect("response never errors");
        if action == FcAction::Complete {
            self.completion_pending = Some(data);
        }
        action
    }

    pub fn current_tag(&self) -> Option<u8> {
        self.current.map(|c| c.tag)
    }
}

/// Sparse word memory behind a slave core.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SlaveMemory {
    pub base: u32,
    pub words: BTreeMap<u32, u32>,
    pub wait_states: u32,
}

impl SlaveMemory {
    pub fn new(base: u32, wait_states: u32) -> Self {
        SlaveMemory {
            base,
            words: BTreeMap::new(),
            wait_states,
        }
    }

    pub fn read(&self, adr: u32) -> u32 {
        self.words.get(&(adr & !3)).copied().unwrap_or(0)
    }

    pub fn write(&mut self, adr: u32, data: u32, sel: u8) {
        let mask = sel_mask(sel);
        let word = self.words.entry(adr & !3).or_insert(0);
        *word = (*word & !mask) | (data & mask);
    }
}

/// Memory-mapped slave core. Acknowledges each cycle for exactly one clock
/// after `wait_states` extra cycles.
#[derive(Debug, Clone)]
pub struct SlaveCore {
    memory: SlaveMemory,
    ack: bool,
    dat_r: u32,
    waited: u32,
    edges: u64,
    spurious_ack_edge: Option<u64>,
}

impl SlaveCore {
    pub fn new(memory: SlaveMemory) -> Self {
        SlaveCore {
            memory,
            ack: false,
            dat_r: 0,
            waited: 0,
            edges: 0,
            spurious_ack_edge: None,
        }
    }

    /// Fault hook: raise ACK without a cycle at this edge index, if idle.
    pub fn inject_spurious_ack(&mut self, edge: u64) {
        self.spurious_ack_edge = Some(edge);
    }

    pub fn memory(&self) -> &SlaveMemory {
        &self.memory
    }

    /// One rising edge, seeing the master-driven signals of this edge.
    /// Returns the bus with this core's ack and read data filled in.
    pub fn respond(&mut self, observed: &WbSignals) -> WbSignals {
        let edge = self.edges;
        self.edges += 1;
        if self.ack {
            self.ack = false;
            self.waited = 0;
        } else if observed.in_cycle() {
            if self.waited == self.memory.wait_states {
                if observed.we {
                    self.memory
                        .write(observed.adr, observed.dat_w, observed.sel);
                    self.dat_r = 0;
                } else {
                    self.dat_r = self.memory.read(observed.adr);
                }
                self.ack = true;
            } else {
                self.waited += 1;
            }
        } else {
            self.waited = 0;
            if self.spurious_ack_edge == Some(edge) {
                self.ack = true;
            }
        }
        WbSignals {
            ack: self.ack,
            dat_r: self.dat_r,
            ..*observed
        }
    }
}
