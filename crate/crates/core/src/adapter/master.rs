// SPDX-License-Identifier: Apache-2.0

use super::ni::{NiReceiver, NiTransmitter};
use super::{AdapterCounters, AdapterEdge, CiChannel, NaFsmState, RouteLut, Unit};
use crate::kernel::{ClockDomain, SimTime, Synchronizer};
use crate::packet::{
    deserialize, serialize, Flit, Packet, Status, TransactionPayload, TxnKind, FLITS_PER_PACKET,
};
use crate::wishbone::WbSignals;

/// Adapter between a WISHBONE master core and the network.
///
/// The transmit unit walks Wait → StorePacket → RouteLookup → Req → Ack,
/// spending exactly one cycle in StorePacket and in RouteLookup. The receive
/// unit walks Wait → StorePacket → Req → Ack and pulses the core's ACK for
/// one cycle when the response matches the active cycle's tag.
#[derive(Debug, Clone)]
pub struct MasterAdapter {
    lut: RouteLut,
    tx_state: NaFsmState,
    rx_state: NaFsmState,
    /// Set once a cycle has been seen negated, so a held cycle is captured once.
    armed: bool,
    latched: WbSignals,
    tx_buffer: Option<[Flit; FLITS_PER_PACKET]>,
    tx_req: bool,
    rx_ack: bool,
    rx_packet: Option<Packet>,
    /// Registered outputs towards the core.
    core: WbSignals,
    tx_ack_sync: Synchronizer,
    rx_req_sync: Synchronizer,
    pub ni_tx: NiTransmitter,
    pub ni_rx: NiReceiver,
    counters: AdapterCounters,
}

impl MasterAdapter {
    pub fn new(lut: RouteLut, domain: ClockDomain) -> Self {
        MasterAdapter {
            lut,
            tx_state: NaFsmState::Wait,
            rx_state: NaFsmState::Wait,
            armed: true,
            latched: WbSignals::default(),
            tx_buffer: None,
            tx_req: false,
            rx_ack: false,
            rx_packet: None,
            core: WbSignals::default(),
            tx_ack_sync: Synchronizer::new(domain),
            rx_req_sync: Synchronizer::new(domain),
            ni_tx: NiTransmitter::default(),
            ni_rx: NiReceiver::default(),
            counters: AdapterCounters::default(),
        }
    }

    pub fn tx_state(&self) -> NaFsmState {
        self.tx_state
    }

    pub fn rx_state(&self) -> NaFsmState {
        self.rx_state
    }

    pub fn counters(&self) -> AdapterCounters {
        self.counters
    }

    pub fn lut(&self) -> &RouteLut {
        &self.lut
    }

    /// ACK, read data and error as registered at the last edge.
    pub fn core_inputs(&self) -> WbSignals {
        self.core
    }

    /// The packet presented to the NI transmitter while req is high.
    pub fn tx_buffer(&self) -> Option<&[Flit; FLITS_PER_PACKET]> {
        self.tx_buffer.as_ref()
    }

    /// The NI transmitter changed its ack level.
    pub fn drive_tx_ack(&mut self, level: bool, now: SimTime) -> Option<SimTime> {
        self.tx_ack_sync.drive(level, now)
    }

    /// The NI receiver changed its req level.
    pub fn drive_rx_req(&mut self, level: bool, now: SimTime) -> Option<SimTime> {
        self.rx_req_sync.drive(level, now)
    }

    pub fn is_idle(&self) -> bool {
        self.tx_state == NaFsmState::Wait
            && self.rx_state == NaFsmState::Wait
            && self.ni_tx.is_idle()
            && self.ni_rx.is_idle()
            && self.tx_ack_sync.is_settled()
            && self.rx_req_sync.is_settled()
    }

    /// One rising edge of the master clock. `bus` holds the core's outputs
    /// for this edge.
    pub fn edge(&mut self, now: SimTime, bus: &WbSignals) -> AdapterEdge {
        let mut out = AdapterEdge::default();
        for c in self.tx_ack_sync.sample(now) {
            out.observed.push((CiChannel::Tx, c));
        }
        for c in self.rx_req_sync.sample(now) {
            out.observed.push((CiChannel::Rx, c));
        }
        self.core.err = false;
        self.core.ack = false;
        self.master_tx_step(bus, &mut out);
        self.master_rx_step(bus, &mut out);
        out
    }

    fn set_tx_req(&mut self, level: bool, out: &mut AdapterEdge) {
        self.tx_req = level;
        out.tx_req = Some(level);
    }

    fn set_rx_ack(&mut self, level: bool, out: &mut AdapterEdge) {
        self.rx_ack = level;
        out.rx_ack = Some(level);
    }

    pub fn master_tx_step(&mut self, bus: &WbSignals, out: &mut AdapterEdge) {
        let ack = self.tx_ack_sync.level();
        let from = self.tx_state;
        self.tx_state = match from {
            NaFsmState::Wait if self.armed && bus.in_cycle() => {
                self.armed = false;
                NaFsmState::StorePacket
            }
            NaFsmState::Wait => NaFsmState::Wait,
            NaFsmState::StorePacket => {
                self.latched = *bus;
                NaFsmState::RouteLookup
            }
            NaFsmState::RouteLookup => match self.lut.lookup(self.latched.adr) {
                Err(_) => {
                    self.counters.unmapped_prefix += 1;
                    self.core.err = bus.in_cycle();
                    NaFsmState::Wait
                }
                Ok(entry) => {
                    let l = &self.latched;
                    let packet = Packet {
                        route: entry.route,
                        return_route: entry.return_route,
                        txn: TransactionPayload {
                            kind: if l.we {
                                TxnKind::WriteRequest
                            } else {
                                TxnKind::ReadRequest
                            },
                            adr: l.adr,
                            data: if l.we { l.dat_w } else { 0 },
                            sel: l.sel,
                            tag: l.tgc,
                            status: Status::Ok,
                        },
                    };
                    self.tx_buffer = Some(serialize(&packet));
                    self.counters.sent += 1;
                    self.set_tx_req(true, out);
                    NaFsmState::Req
                }
            },
            NaFsmState::Req if ack => {
                self.set_tx_req(false, out);
                NaFsmState::Ack
            }
            NaFsmState::Req => NaFsmState::Req,
            NaFsmState::Ack if !ack => {
                self.tx_buffer = None;
                NaFsmState::Wait
            }
            NaFsmState::Ack => NaFsmState::Ack,
        };
        if !bus.in_cycle() {
            self.armed = true;
        }
        out.transition(Unit::MasterTx, from, self.tx_state);
    }

    pub fn master_rx_step(&mut self, bus: &WbSignals, out: &mut AdapterEdge) {
        let req = self.rx_req_sync.level();
        let from = self.rx_state;
        self.rx_state = match from {
            NaFsmState::Wait if req => NaFsmState::StorePacket,
            NaFsmState::StorePacket => {
                let flits = self
                    .ni_rx
                    .front()
                    .expect("receiver raised req with a packet");
                match deserialize(flits) {
                    Ok(p) if !p.txn.kind.is_request() => self.rx_packet = Some(p),
                    _ => {
                        self.counters.discarded_malformed += 1;
                        out.malformed = true;
                    }
                }
                self.set_rx_ack(true, out);
                NaFsmState::Req
            }
            NaFsmState::Req => {
                if let Some(p) = self.rx_packet.take() {
                    if bus.in_cycle() && bus.tgc == p.txn.tag {
                        self.core.ack = true;
                        self.core.dat_r = p.txn.data;
                        self.counters.received += 1;
                    } else {
                        self.counters.stale_tag += 1;
                        out.undelivered = Some(p.txn);
                    }
                }
                NaFsmState::Ack
            }
            NaFsmState::Ack if !req => {
                self.set_rx_ack(false, out);
                NaFsmState::Wait
            }
            s => s,
        };
        out.transition(Unit::MasterRx, from, self.rx_state);
    }
}
