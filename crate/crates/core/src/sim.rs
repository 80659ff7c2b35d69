// SPDX-License-Identifier: Apache-2.0

//! The assembled network: routers, links, adapters and cores driven by one
//! event queue.
//!
//! Trace components are named after nodes: `n3.out.E` is the channel leaving
//! router 3 eastwards, `n3.ni` the channel from adapter 3 into its router,
//! `n3.citx`/`n3.cirx` the CI/NI handshake pairs, `n3.mtx`/`n3.mrx`/`n3.stx`/
//! `n3.srx` the adapter units, `n3.wb` the core bus, `n3.core` the master
//! core and `n3.router` the router itself. Levels the CI observes through a
//! synchronizer are logged under `n3.citx.sync` and `n3.cirx.sync`.

use thiserror::Error;

use crate::adapter::AsyncPort;
use crate::adapter::{
    AdapterEdge, CiChannel, HandshakeEdge, MasterAdapter, NetworkAdapter, RouteLut, SlaveAdapter,
};
use crate::config::{NodeRole, SimConfig};
use crate::kernel::{
    ClockDomain, ComponentId, DomainId, EventHandle, Scheduler, SimTime, Trace, TraceKind,
};
use crate::packet::{Flit, FlitKind};
use crate::router::{FlitAction, Offer, Router, RouterError};
use crate::stats::{RunReport, StatEvent, StatsError};
use crate::topology::{Direction, MeshDims, NodeCoord};
use crate::wishbone::{
    CoreEvent, FcAction, MasterCore, MasterFault, SlaveCore, SlaveMemory, WbChecker, WbSignals,
    WorkloadMode,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Setup(String),
    #[error(transparent)]
    Router(#[from] RouterError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// One asynchronous channel, named by its sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinkId {
    /// Adapter transmitter into the router's local input.
    Inject(usize),
    /// Router output port.
    Out(usize, Direction),
}

impl LinkId {
    pub fn component(self) -> String {
        match self {
            LinkId::Inject(n) => format!("n{n}.ni"),
            LinkId::Out(n, d) => format!("n{n}.out.{}", d.short()),
        }
    }

    fn slot(self) -> usize {
        match self {
            LinkId::Inject(n) => n * 6 + 5,
            LinkId::Out(n, d) => n * 6 + d.index(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    Master(MasterFault),
    /// Slave core raises ACK outside a cycle at this edge index.
    SpuriousSlaveAck {
        edge: u64,
    },
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Keep trace records in memory, not only the digest.
    pub retain_trace: bool,
    pub faults: Vec<(usize, Fault)>,
    /// Channels whose receiver never answers req↑.
    pub stalled_links: Vec<LinkId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ev {
    Edge(usize),
    Link(LinkId, HandshakeEdge),
    Resolve(usize, Direction),
    NiTxReq(usize, bool),
    NiRxAck(usize, bool),
    Timer(usize),
}

#[derive(Debug)]
struct MasterNode {
    core: MasterCore,
    na: MasterAdapter,
    checker: WbChecker,
    timer: Option<EventHandle>,
}

#[derive(Debug)]
struct SlaveNode {
    core: SlaveCore,
    na: SlaveAdapter,
    checker: WbChecker,
    /// Slave core outputs registered at the last edge.
    regs: WbSignals,
}

#[derive(Debug)]
enum Attached {
    None,
    Master(Box<MasterNode>),
    Slave(Box<SlaveNode>),
}

#[derive(Debug)]
struct Node {
    coord: NodeCoord,
    router: Router,
    domain: Option<ClockDomain>,
    attached: Attached,
    bus: WbSignals,
}

/// Result of a finished run.
#[derive(Debug)]
pub struct SimOutput {
    pub report: RunReport,
    pub trace: Trace,
    /// True when every workload finished and the network drained before
    /// the time limit.
    pub drained: bool,
}

pub struct Simulation {
    dims: MeshDims,
    nodes: Vec<Node>,
    links: Vec<AsyncPort>,
    stalled: Vec<bool>,
    sched: Scheduler<Ev>,
    trace: Trace,
    report: RunReport,
    delay: u64,
    timeout: u64,
    run_until: SimTime,
    masters_left: usize,
    drained: bool,
}

impl Simulation {
    pub fn new(cfg: &SimConfig, opts: RunOptions) -> Result<Self, SimError> {
        cfg.router
            .validate()
            .map_err(|e| SimError::Setup(e.to_string()))?;
        let dims = cfg.mesh;
        if cfg.nodes.len() != dims.node_count() {
            return Err(SimError::Setup(format!(
                "{} node entries for a {}-node mesh",
                cfg.nodes.len(),
                dims.node_count()
            )));
        }
        let setup = |e: &dyn std::fmt::Display| SimError::Setup(e.to_string());
        let mut sched = Scheduler::new();
        let mut nodes = Vec::with_capacity(dims.node_count());
        let mut masters_left = 0;
        for (i, nc) in cfg.nodes.iter().enumerate() {
            let coord = dims.coord_of(i).map_err(|e| setup(&e))?;
            let mut present = [false; 5];
            for d in Direction::COMPASS {
                present[d.index()] = dims.neighbor(coord, d).is_some();
            }
            present[Direction::Local.index()] = nc.role != NodeRole::Idle;
            let router = Router::new(cfg.router, present);
            let domain = match nc.role {
                NodeRole::Idle => None,
                _ => Some(
                    ClockDomain::new(DomainId(i as u16), nc.period_ps, nc.phase_ps)
                        .map_err(|e| setup(&e))?,
                ),
            };
            let attached = match nc.role {
                NodeRole::Idle => Attached::None,
                NodeRole::Master => {
                    let lut = RouteLut::build(dims, i, &cfg.lut).map_err(|e| setup(&e))?;
                    if let WorkloadMode::RandomUniform { slaves, .. } = &nc.workload.mode {
                        if slaves.is_empty() || slaves.iter().any(|&s| cfg.prefix_of(s).is_none()) {
                            return Err(SimError::Setup(format!(
                                "master {i}: random workload targets a slave without a lut entry"
                            )));
                        }
                    }
                    let ops = nc.workload.materialize(i, |s| cfg.prefix_of(s));
                    let mut core = MasterCore::new(ops, cfg.flow_control);
                    for (n, f) in &opts.faults {
                        if let (true, Fault::Master(m)) = (*n == i, f) {
                            core.inject(*m);
                        }
                    }
                    if core.op_count() > 0 {
                        masters_left += 1;
                    }
                    Attached::Master(Box::new(MasterNode {
                        core,
                        na: MasterAdapter::new(lut, domain.unwrap()),
                        checker: WbChecker::new(),
                        timer: None,
                    }))
                }
                NodeRole::Slave => {
                    let base = cfg.prefix_of(i).map_or(0, |p| (p as u32) << 28);
                    let mut core = SlaveCore::new(SlaveMemory::new(base, nc.wait_states));
                    for (n, f) in &opts.faults {
                        if let (true, Fault::SpuriousSlaveAck { edge }) = (*n == i, f) {
                            core.inject_spurious_ack(*edge);
                        }
                    }
                    Attached::Slave(Box::new(SlaveNode {
                        core,
                        na: SlaveAdapter::new(domain.unwrap()),
                        checker: WbChecker::new(),
                        regs: WbSignals::default(),
                    }))
                }
            };
            if let Some(d) = &domain {
                sched
                    .schedule(d.first_edge(), ComponentId(i as u32), Ev::Edge(i))
                    .expect("first edge is not in the past");
            }
            nodes.push(Node {
                coord,
                router,
                domain,
                attached,
                bus: WbSignals::default(),
            });
        }
        let mut stalled = vec![false; dims.node_count() * 6];
        for l in &opts.stalled_links {
            stalled[l.slot()] = true;
        }
        Ok(Simulation {
            dims,
            nodes,
            links: vec![AsyncPort::default(); dims.node_count() * 6],
            stalled,
            sched,
            trace: Trace::new(opts.retain_trace),
            report: RunReport::new(),
            delay: cfg.router.channel_delay,
            timeout: cfg.flow_control.timeout,
            run_until: cfg.run_until,
            masters_left,
            // Nothing can ever be injected without a master.
            drained: masters_left == 0,
        })
    }

    pub fn now(&self) -> SimTime {
        self.sched.now()
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn master_adapter(&self, node: usize) -> Option<&MasterAdapter> {
        match &self.nodes.get(node)?.attached {
            Attached::Master(m) => Some(&m.na),
            _ => None,
        }
    }

    pub fn slave_adapter(&self, node: usize) -> Option<&SlaveAdapter> {
        match &self.nodes.get(node)?.attached {
            Attached::Slave(s) => Some(&s.na),
            _ => None,
        }
    }

    pub fn router(&self, node: usize) -> &Router {
        &self.nodes[node].router
    }

    /// Runs until every workload is done and the network is empty, or
    /// until `t_end`.
    pub fn run_until(&mut self, t_end: SimTime) -> Result<(), SimError> {
        while !self.drained {
            let Some(ev) = self.sched.pop_until(t_end) else {
                break;
            };
            self.handle(ev.payload)?;
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<SimOutput, SimError> {
        self.run_until(self.run_until)?;
        Ok(self.finish())
    }

    pub fn finish(mut self) -> SimOutput {
        let r = &mut self.report;
        r.routers = self.nodes.iter().map(|n| n.router.counters()).collect();
        for (i, n) in self.nodes.iter().enumerate() {
            match &n.attached {
                Attached::Master(m) => {
                    r.adapters.insert(i, m.na.counters());
                    let f = m.core.flow();
                    r.stale_responses += f.stale + f.spurious;
                }
                Attached::Slave(s) => {
                    r.adapters.insert(i, s.na.counters());
                    r.slave_memories.insert(i, s.core.memory().clone());
                }
                Attached::None => {}
            }
        }
        r.trace_hash = self.trace.hash();
        r.trace_records = self.trace.len();
        r.end_time = self.sched.now();
        r.events_fired = self.sched.fired();
        SimOutput {
            report: self.report,
            trace: self.trace,
            drained: self.drained,
        }
    }

    fn at(&mut self, delay: u64, ev: Ev) -> EventHandle {
        let target = match ev {
            Ev::Edge(n)
            | Ev::Resolve(n, _)
            | Ev::NiTxReq(n, _)
            | Ev::NiRxAck(n, _)
            | Ev::Timer(n) => n,
            Ev::Link(LinkId::Inject(n), _) | Ev::Link(LinkId::Out(n, _), _) => n,
        };
        self.sched
            .schedule(self.sched.now() + delay, ComponentId(target as u32), ev)
            .expect("events are never scheduled in the past")
    }

    fn log(&mut self, component: String, kind: TraceKind, detail: String) {
        self.trace.push(self.sched.now(), component, kind, detail);
    }

    fn handle(&mut self, ev: Ev) -> Result<(), SimError> {
        match ev {
            Ev::Edge(n) => self.on_edge(n)?,
            Ev::Link(link, edge) => self.on_link(link, edge)?,
            Ev::Resolve(n, out) => {
                if let Some((port, offer)) = self.nodes[n].router.arbitrate(out) {
                    self.on_offer(n, port, offer)?;
                }
            }
            Ev::NiTxReq(n, level) => self.on_ni_tx_req(n, level),
            Ev::NiRxAck(n, level) => self.on_ni_rx_ack(n, level),
            Ev::Timer(n) => self.on_timer(n)?,
        }
        Ok(())
    }

    fn na(&mut self, n: usize) -> &mut dyn NetworkAdapter {
        match &mut self.nodes[n].attached {
            Attached::Master(m) => &mut m.na,
            Attached::Slave(s) => &mut s.na,
            Attached::None => unreachable!("node {n} has no adapter"),
        }
    }

    // ---- channels ----

    /// Starts the next transfer on `link` if it is idle and has a flit.
    fn try_start(&mut self, link: LinkId) -> Result<(), SimError> {
        let port = &self.links[link.slot()];
        if !port.is_idle() || port.data.is_some() {
            return Ok(());
        }
        let (flit, retried) = match link {
            LinkId::Inject(n) => (self.na(n).transmitter().next_flit(), None),
            LinkId::Out(n, d) => match self.nodes[n].router.output_dequeue(d) {
                Some((flit, retried)) => (Some(flit), retried.map(|r| (n, r))),
                None => (None, None),
            },
        };
        if let Some(flit) = flit {
            self.links[link.slot()]
                .load(flit)
                .expect("idle channel accepts data");
            self.at(self.delay, Ev::Link(link, HandshakeEdge::ReqRise));
        }
        // The freed slot may admit a waiting flit, which can start this same
        // link again; only after the current flit is loaded.
        if let Some((n, (p, offer))) = retried {
            self.on_offer(n, p, offer)?;
        }
        Ok(())
    }

    fn on_link(&mut self, link: LinkId, edge: HandshakeEdge) -> Result<(), SimError> {
        let slot = link.slot();
        if let Err(e) = self.links[slot].apply(edge) {
            panic!("{} broke the four-phase protocol: {e}", link.component());
        }
        self.log(link.component(), TraceKind::HandshakeEdge, edge.to_string());
        match edge {
            HandshakeEdge::ReqRise => {
                let flit = self.links[slot].data.expect("req rises with data");
                self.log(
                    link.component(),
                    TraceKind::FlitTransfer,
                    format!(
                        "flit={} payload={:#010x}",
                        flit_name(flit.kind),
                        flit.payload
                    ),
                );
                if !self.stalled[slot] {
                    self.deliver(link, flit)?;
                }
            }
            HandshakeEdge::AckRise => {
                self.at(self.delay, Ev::Link(link, HandshakeEdge::ReqFall));
            }
            HandshakeEdge::ReqFall => {
                self.at(self.delay, Ev::Link(link, HandshakeEdge::AckFall));
            }
            HandshakeEdge::AckFall => {
                self.try_start(link)?;
                if let LinkId::Inject(n) = link {
                    let idle = self.links[slot].data.is_none();
                    let tx = self.na(n).transmitter();
                    if idle && tx.is_streaming() && tx.drained() {
                        tx.finish();
                        self.ni_level(n, CiChannel::Tx, "ack", true);
                        let now = self.now();
                        self.na(n).drive_tx_ack(true, now);
                    }
                }
            }
        }
        Ok(())
    }

    /// Hands a flit to the receiving end of `link`.
    fn deliver(&mut self, link: LinkId, flit: Flit) -> Result<(), SimError> {
        let now = self.now();
        let (node, port) = match link {
            LinkId::Inject(n) => (n, Direction::Local),
            LinkId::Out(n, Direction::Local) => {
                if self.na(n).receiver().push(flit) {
                    self.report.packets.delivered += 1;
                    self.raise_rx_req(n);
                }
                self.at(self.delay, Ev::Link(link, HandshakeEdge::AckRise));
                return Ok(());
            }
            LinkId::Out(n, d) => {
                let c = self
                    .dims
                    .neighbor(self.nodes[n].coord, d)
                    .expect("router outputs lead to neighbours");
                (self.dims.index_of(c), d.opposite())
            }
        };
        let offer = self.nodes[node].router.input_accept(port, flit, now)?;
        self.on_offer(node, port, offer)
    }

    /// The channel feeding input `port` of router `node`.
    fn feeder(&self, node: usize, port: Direction) -> LinkId {
        match port {
            Direction::Local => LinkId::Inject(node),
            d => {
                let c = self
                    .dims
                    .neighbor(self.nodes[node].coord, d)
                    .expect("input ports face neighbours");
                LinkId::Out(self.dims.index_of(c), d.opposite())
            }
        }
    }

    fn on_offer(&mut self, node: usize, port: Direction, offer: Offer) -> Result<(), SimError> {
        match offer {
            Offer::Held { requested } => {
                if let Some(out) = requested {
                    self.at(0, Ev::Resolve(node, out));
                }
            }
            Offer::Accepted { action, released } => {
                match action {
                    FlitAction::Enqueued(out) => self.try_start(LinkId::Out(node, out))?,
                    FlitAction::Dropped(out) => {
                        self.report.packets.dropped += 1;
                        self.report.record(StatEvent::Drop { node })?;
                        self.log(
                            format!("n{node}.router"),
                            TraceKind::Drop,
                            format!("in={port} out={out} reason=full"),
                        );
                    }
                    FlitAction::Malformed(out) => {
                        self.report.packets.malformed += 1;
                        self.log(
                            format!("n{node}.router"),
                            TraceKind::Drop,
                            format!("in={port} out={out} reason=malformed"),
                        );
                    }
                    FlitAction::Discarded => {}
                }
                if let Some(out) = released {
                    self.at(0, Ev::Resolve(node, out));
                }
                let feeder = self.feeder(node, port);
                self.at(self.delay, Ev::Link(feeder, HandshakeEdge::AckRise));
            }
        }
        Ok(())
    }

    // ---- NI side of the CI/NI pairs ----

    fn ni_level(&mut self, n: usize, ch: CiChannel, signal: &str, level: bool) {
        self.log(
            format!("n{n}.{}", ch.tag()),
            TraceKind::HandshakeEdge,
            format!("sig={signal} level={}", level as u8),
        );
    }

    fn raise_rx_req(&mut self, n: usize) {
        let rx = self.na(n).receiver();
        if rx.busy || !rx.has_ready() {
            return;
        }
        rx.req = true;
        rx.busy = true;
        self.ni_level(n, CiChannel::Rx, "req", true);
        let now = self.now();
        self.na(n).drive_rx_req(true, now);
    }

    fn on_ni_tx_req(&mut self, n: usize, level: bool) {
        let now = self.now();
        if level {
            let flits = *self.na(n).outgoing().expect("req high with a packet");
            self.na(n)
                .transmitter()
                .begin(&flits)
                .expect("transmitter idle at req");
            self.report.packets.injected += 1;
            self.try_start(LinkId::Inject(n))
                .expect("injection channel start");
        } else {
            self.na(n).transmitter().ack = false;
            self.ni_level(n, CiChannel::Tx, "ack", false);
            self.na(n).drive_tx_ack(false, now);
        }
    }

    fn on_ni_rx_ack(&mut self, n: usize, level: bool) {
        let now = self.now();
        if level {
            let rx = self.na(n).receiver();
            rx.pop();
            rx.req = false;
            self.ni_level(n, CiChannel::Rx, "req", false);
            self.na(n).drive_rx_req(false, now);
        } else {
            self.na(n).receiver().busy = false;
            self.raise_rx_req(n);
        }
    }

    // ---- clocked side ----

    fn on_edge(&mut self, n: usize) -> Result<(), SimError> {
        let now = self.now();
        let mut attached = std::mem::replace(&mut self.nodes[n].attached, Attached::None);
        let result = match &mut attached {
            Attached::Master(m) => self.master_edge(n, m, now),
            Attached::Slave(s) => self.slave_edge(n, s, now),
            Attached::None => Ok(()),
        };
        self.nodes[n].attached = attached;
        result?;
        let next = self.nodes[n]
            .domain
            .as_ref()
            .expect("clocked node has a domain")
            .next_edge(now);
        self.at(next - now, Ev::Edge(n));
        if self.masters_left == 0 && self.quiescent() {
            self.drained = true;
        }
        Ok(())
    }

    fn master_edge(&mut self, n: usize, m: &mut MasterNode, now: SimTime) -> Result<(), SimError> {
        let events = m.core.edge(now, &m.na.core_inputs());
        for ev in events {
            self.core_event(n, m, ev, now)?;
        }
        let out = m.na.edge(now, &m.core.outputs());
        self.adapter_edge(n, &out);
        if let Some(txn) = out.undelivered {
            m.core.on_network_response(txn.tag, txn.data, txn.status);
        }
        let inputs = m.na.core_inputs();
        let bus = WbSignals {
            ack: inputs.ack,
            dat_r: inputs.dat_r,
            err: inputs.err,
            ..m.core.outputs()
        };
        for v in m.checker.observe(&bus, now) {
            self.log(
                format!("n{n}.wb"),
                TraceKind::WbEdge,
                format!("violation={}", v.rule),
            );
            self.report.record(StatEvent::Violation {
                node: n,
                violation: v,
            })?;
        }
        self.bus_edge(n, bus);
        Ok(())
    }

    fn slave_edge(&mut self, n: usize, s: &mut SlaveNode, now: SimTime) -> Result<(), SimError> {
        let out = s.na.edge(now, &s.regs);
        self.adapter_edge(n, &out);
        s.regs = s.core.respond(&s.na.bus_outputs());
        for v in s.checker.observe(&s.regs, now) {
            self.log(
                format!("n{n}.wb"),
                TraceKind::WbEdge,
                format!("violation={}", v.rule),
            );
            self.report.record(StatEvent::Violation {
                node: n,
                violation: v,
            })?;
        }
        self.bus_edge(n, s.regs);
        Ok(())
    }

    fn bus_edge(&mut self, n: usize, bus: WbSignals) {
        if self.nodes[n].bus != bus {
            self.nodes[n].bus = bus;
            self.log(format!("n{n}.wb"), TraceKind::WbEdge, bus.to_string());
        }
    }

    fn adapter_edge(&mut self, n: usize, out: &AdapterEdge) {
        for (ch, c) in &out.observed {
            let signal = match ch {
                CiChannel::Tx => "ack",
                CiChannel::Rx => "req",
            };
            self.log(
                format!("n{n}.{}.sync", ch.tag()),
                TraceKind::HandshakeEdge,
                format!(
                    "sig={signal} level={} changed={}",
                    c.level as u8, c.changed_at
                ),
            );
        }
        for (unit, from, to) in &out.transitions {
            self.log(
                format!("n{n}.{}", unit.tag()),
                TraceKind::StateChange,
                format!("from={from} to={to}"),
            );
        }
        if let Some(level) = out.tx_req {
            self.log(
                format!("n{n}.citx"),
                TraceKind::HandshakeEdge,
                format!("sig=req level={}", level as u8),
            );
            self.at(self.delay, Ev::NiTxReq(n, level));
        }
        if let Some(level) = out.rx_ack {
            self.log(
                format!("n{n}.cirx"),
                TraceKind::HandshakeEdge,
                format!("sig=ack level={}", level as u8),
            );
            self.at(self.delay, Ev::NiRxAck(n, level));
        }
    }

    fn core_event(
        &mut self,
        n: usize,
        m: &mut MasterNode,
        ev: CoreEvent,
        now: SimTime,
    ) -> Result<(), SimError> {
        match ev {
            CoreEvent::Issued { txn, op, tag } => {
                let slave = m.na.lut().lookup(op.adr).ok().map(|e| e.node);
                let hops = slave.map_or(0, |s| {
                    let c = self.dims.coord_of(s).expect("lut targets are on the mesh");
                    self.nodes[n].coord.manhattan(c)
                });
                self.report.record(StatEvent::Injection {
                    master: n,
                    txn,
                    slave,
                    kind: op.kind,
                    adr: op.adr,
                    data: op.data,
                    hops,
                    at: now,
                })?;
                self.log(
                    format!("n{n}.core"),
                    TraceKind::StateChange,
                    format!(
                        "issue txn={txn} tag={tag} kind={} adr={:#010x}",
                        op.kind.as_str(),
                        op.adr
                    ),
                );
                m.timer = Some(self.at(self.timeout, Ev::Timer(n)));
            }
            CoreEvent::Reissued { txn, tag } => {
                self.report
                    .record(StatEvent::Retransmit { master: n, txn })?;
                self.log(
                    format!("n{n}.core"),
                    TraceKind::Retransmit,
                    format!("reissue txn={txn} tag={tag}"),
                );
                m.timer = Some(self.at(self.timeout, Ev::Timer(n)));
            }
            CoreEvent::Completed {
                txn,
                data,
                retransmits,
                ..
            } => {
                if let Some(h) = m.timer.take() {
                    self.sched.cancel(h);
                }
                self.report.record(StatEvent::Delivery {
                    master: n,
                    txn,
                    data,
                    retransmits,
                    at: now,
                })?;
                self.log(
                    format!("n{n}.core"),
                    TraceKind::StateChange,
                    format!("complete txn={txn} data={data:#010x}"),
                );
            }
            CoreEvent::Failed {
                txn, retransmits, ..
            } => {
                if let Some(h) = m.timer.take() {
                    self.sched.cancel(h);
                }
                self.report.record(StatEvent::Failure {
                    master: n,
                    txn,
                    retransmits,
                    at: now,
                })?;
                self.log(
                    format!("n{n}.core"),
                    TraceKind::StateChange,
                    format!("fail txn={txn}"),
                );
            }
        }
        if m.core.is_done()
            && m.timer.is_none()
            && matches!(ev, CoreEvent::Completed { .. } | CoreEvent::Failed { .. })
        {
            self.masters_left -= 1;
        }
        Ok(())
    }

    fn on_timer(&mut self, n: usize) -> Result<(), SimError> {
        let Attached::Master(m) = &mut self.nodes[n].attached else {
            unreachable!("timers belong to masters");
        };
        m.timer = None;
        let tag = m.core.current_tag();
        let action = m.core.on_timer();
        let what = match action {
            FcAction::Retransmit => "timeout action=retransmit",
            FcAction::Fail => "timeout action=fail",
            FcAction::None | FcAction::Complete => return Ok(()),
        };
        let tag = tag.map_or(String::from("-"), |t| t.to_string());
        self.log(
            format!("n{n}.core"),
            TraceKind::Retransmit,
            format!("{what} tag={tag}"),
        );
        Ok(())
    }

    fn quiescent(&self) -> bool {
        self.links.iter().all(|l| l.is_idle() && l.data.is_none())
            && self.nodes.iter().all(|n| {
                n.router.is_idle()
                    && match &n.attached {
                        Attached::None => true,
                        Attached::Master(m) => m.na.is_idle() && m.timer.is_none(),
                        Attached::Slave(s) => s.na.is_idle() && !s.regs.ack,
                    }
            })
    }
}

fn flit_name(k: FlitKind) -> &'static str {
    match k {
        FlitKind::Head => "head",
        FlitKind::Body => "body",
        FlitKind::Tail => "tail",
    }
}

/// Builds and runs a scenario to completion.
pub fn simulate(cfg: &SimConfig, opts: RunOptions) -> Result<SimOutput, SimError> {
    Simulation::new(cfg, opts)?.run()
}
