// SPDX-License-Identifier: Apache-2.0

use super::ni::{NiReceiver, NiTransmitter};
use super::{AdapterCounters, AdapterEdge, CiChannel, NaFsmState, Unit};
use crate::kernel::{ClockDomain, SimTime, Synchronizer};
use crate::packet::{
    deserialize, serialize, Flit, Packet, Status, TransactionPayload, TxnKind, FLITS_PER_PACKET,
};
use crate::wishbone::WbSignals;

/// Adapter between the network and a WISHBONE slave core.
///
/// The receive unit turns each request packet into one bus cycle and hands
/// the slave's answer to the transmit unit, which sends it back along the
/// request's return route with the request's tag. One request is served at a
/// time.
#[derive(Debug, Clone)]
pub struct SlaveAdapter {
    rx_state: NaFsmState,
    tx_state: NaFsmState,
    request: Option<Packet>,
    response: Option<Packet>,
    tx_buffer: Option<[Flit; FLITS_PER_PACKET]>,
    bus: WbSignals,
    tx_req: bool,
    rx_ack: bool,
    tx_ack_sync: Synchronizer,
    rx_req_sync: Synchronizer,
    pub ni_tx: NiTransmitter,
    pub ni_rx: NiReceiver,
    counters: AdapterCounters,
}

impl SlaveAdapter {
    pub fn new(domain: ClockDomain) -> Self {
        SlaveAdapter {
            rx_state: NaFsmState::Wait,
            tx_state: NaFsmState::Wait,
            request: None,
            response: None,
            tx_buffer: None,
            bus: WbSignals::default(),
            tx_req: false,
            rx_ack: false,
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

    /// Master-side signals driven to the slave core.
    pub fn bus_outputs(&self) -> WbSignals {
        self.bus
    }

    pub fn tx_buffer(&self) -> Option<&[Flit; FLITS_PER_PACKET]> {
        self.tx_buffer.as_ref()
    }

    pub fn drive_tx_ack(&mut self, level: bool, now: SimTime) -> Option<SimTime> {
        self.tx_ack_sync.drive(level, now)
    }

    pub fn drive_rx_req(&mut self, level: bool, now: SimTime) -> Option<SimTime> {
        self.rx_req_sync.drive(level, now)
    }

    pub fn is_idle(&self) -> bool {
        self.tx_state == NaFsmState::Wait
            && self.rx_state == NaFsmState::Wait
            && self.response.is_none()
            && self.ni_tx.is_idle()
            && self.ni_rx.is_idle()
            && self.tx_ack_sync.is_settled()
            && self.rx_req_sync.is_settled()
    }

    /// One rising edge of the slave clock. `core` is the slave core's
    /// registered ack and read data from the previous edge.
    pub fn edge(&mut self, now: SimTime, core: &WbSignals) -> AdapterEdge {
        let mut out = AdapterEdge::default();
        for c in self.tx_ack_sync.sample(now) {
            out.observed.push((CiChannel::Tx, c));
        }
        for c in self.rx_req_sync.sample(now) {
            out.observed.push((CiChannel::Rx, c));
        }
        self.slave_tx_step(&mut out);
        self.slave_rx_step(core, &mut out);
        out
    }

    fn slave_tx_step(&mut self, out: &mut AdapterEdge) {
        let ack = self.tx_ack_sync.level();
        let from = self.tx_state;
        self.tx_state = match from {
            NaFsmState::Wait if self.response.is_some() => NaFsmState::StorePacket,
            NaFsmState::StorePacket => {
                let p = self.response.take().expect("store follows a response");
                self.tx_buffer = Some(serialize(&p));
                self.counters.sent += 1;
                self.tx_req = true;
                out.tx_req = Some(true);
                NaFsmState::Req
            }
            NaFsmState::Req if ack => {
                self.tx_req = false;
                out.tx_req = Some(false);
                NaFsmState::Ack
            }
            NaFsmState::Ack if !ack => {
                self.tx_buffer = None;
                NaFsmState::Wait
            }
            s => s,
        };
        out.transition(Unit::SlaveTx, from, self.tx_state);
    }

    fn slave_rx_step(&mut self, core: &WbSignals, out: &mut AdapterEdge) {
        let req = self.rx_req_sync.level();
        let from = self.rx_state;
        self.rx_state = match from {
            NaFsmState::Wait
                if req && self.tx_state == NaFsmState::Wait && self.response.is_none() =>
            {
                NaFsmState::StorePacket
            }
            NaFsmState::StorePacket => {
                let flits = self
                    .ni_rx
                    .front()
                    .expect("receiver raised req with a packet");
                self.rx_ack = true;
                out.rx_ack = Some(true);
                match deserialize(flits) {
                    Ok(p) if p.txn.kind.is_request() => {
                        let t = &p.txn;
                        self.bus = WbSignals {
                            cyc: true,
                            stb: true,
                            we: t.kind == TxnKind::WriteRequest,
                            adr: t.adr,
                            dat_w: t.data,
                            sel: t.sel,
                            tgc: t.tag,
                            ..WbSignals::default()
                        };
                        self.request = Some(p);
                        self.counters.received += 1;
                        NaFsmState::Req
                    }
                    _ => {
                        self.counters.discarded_malformed += 1;
                        out.malformed = true;
                        NaFsmState::Ack
                    }
                }
            }
            NaFsmState::Req if core.ack => {
                let req = self.request.take().expect("bus cycle has a request");
                let kind = req.txn.kind.response().expect("requests have responses");
                self.response = Some(Packet {
                    route: req.return_route,
                    return_route: req.route,
                    txn: TransactionPayload {
                        kind,
                        adr: req.txn.adr,
                        data: if kind == TxnKind::ReadResponse {
                            core.dat_r
                        } else {
                            0
                        },
                        sel: req.txn.sel,
                        tag: req.txn.tag,
                        status: Status::Ok,
                    },
                });
                self.bus = WbSignals::default();
                NaFsmState::Ack
            }
            NaFsmState::Ack if !req => {
                self.rx_ack = false;
                out.rx_ack = Some(false);
                NaFsmState::Wait
            }
            s => s,
        };
        out.transition(Unit::SlaveRx, from, self.rx_state);
    }
}
