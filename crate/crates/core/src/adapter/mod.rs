// SPDX-License-Identifier: Apache-2.0

//! Network adapters.
//!
//! Each adapter has a core interface (CI), clocked with its IP core, and a
//! network interface (NI) made of an asynchronous transmitter and receiver.
//! The CI and NI exchange whole packets over a four-phase req/ack pair in
//! each direction; every level the NI drives into the CI passes through a
//! [`Synchronizer`](crate::kernel::Synchronizer). The NI moves packets to and
//! from the router one flit per handshake.

mod handshake;
mod lut;
mod master;
mod ni;
mod slave;

use std::fmt;

use thiserror::Error;

pub use handshake::{
    audit_channel, handshake_drive, AsyncPort, HandshakeEdge, HandshakeRole, Transfer,
};
pub use lut::{lut_lookup, LutEntry, RouteLut, LUT_ENTRIES};
pub use master::MasterAdapter;
pub use ni::{NiReceiver, NiTransmitter};
pub use slave::SlaveAdapter;

use crate::kernel::{SimTime, SyncChange};
use crate::packet::{Flit, TransactionPayload, FLITS_PER_PACKET};
use crate::topology::TopologyError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdapterError {
    #[error("address prefix {0:#x} is not mapped")]
    UnmappedPrefix(u8),
    #[error("address prefix {0:#x} out of range")]
    PrefixOutOfRange(u8),
    #[error("prefix {prefix:#x} maps to the adapter's own node {node}")]
    SelfTarget { prefix: u8, node: usize },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("channel is not idle")]
    ChannelBusy,
    #[error("illegal handshake edge {edge} with req={req} ack={ack}")]
    HandshakeOrder {
        edge: HandshakeEdge,
        req: bool,
        ack: bool,
    },
    #[error("out-of-order handshake edge {edge} at {time} ps")]
    AuditOrder { time: SimTime, edge: HandshakeEdge },
    #[error("handshake edge {edge} at {time} ps is not later than the previous edge")]
    AuditTiming { time: SimTime, edge: HandshakeEdge },
    #[error("transmitter already holds a packet")]
    TransmitterBusy,
}

/// Controller states shared by all adapter units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum NaFsmState {
    #[default]
    Wait,
    StorePacket,
    RouteLookup,
    Req,
    Ack,
}

impl NaFsmState {
    pub fn name(self) -> &'static str {
        match self {
            NaFsmState::Wait => "Wait",
            NaFsmState::StorePacket => "StorePacket",
            NaFsmState::RouteLookup => "RouteLookup",
            NaFsmState::Req => "Req",
            NaFsmState::Ack => "Ack",
        }
    }

    pub fn parse(s: &str) -> Option<NaFsmState> {
        Some(match s {
            "Wait" => NaFsmState::Wait,
            "StorePacket" => NaFsmState::StorePacket,
            "RouteLookup" => NaFsmState::RouteLookup,
            "Req" => NaFsmState::Req,
            "Ack" => NaFsmState::Ack,
            _ => return None,
        })
    }
}

impl fmt::Display for NaFsmState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    MasterTx,
    MasterRx,
    SlaveTx,
    SlaveRx,
}

impl Unit {
    pub fn tag(self) -> &'static str {
        match self {
            Unit::MasterTx => "mtx",
            Unit::MasterRx => "mrx",
            Unit::SlaveTx => "stx",
            Unit::SlaveRx => "srx",
        }
    }
}

/// The CI/NI handshake pair in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CiChannel {
    /// CI drives req, NI transmitter drives ack.
    Tx,
    /// NI receiver drives req, CI drives ack.
    Rx,
}

impl CiChannel {
    pub fn tag(self) -> &'static str {
        match self {
            CiChannel::Tx => "citx",
            CiChannel::Rx => "cirx",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AdapterCounters {
    pub sent: u64,
    pub received: u64,
    pub discarded_malformed: u64,
    /// Responses that found no matching active bus cycle.
    pub stale_tag: u64,
    pub unmapped_prefix: u64,
}

/// Everything an adapter did on one clock edge.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AdapterEdge {
    pub transitions: Vec<(Unit, NaFsmState, NaFsmState)>,
    /// Synchronized NI levels that became visible at this edge.
    pub observed: Vec<(CiChannel, SyncChange)>,
    /// New level of the CI-driven req on the transmit pair.
    pub tx_req: Option<bool>,
    /// New level of the CI-driven ack on the receive pair.
    pub rx_ack: Option<bool>,
    /// A response that could not be handed to the core as a bus ack.
    pub undelivered: Option<TransactionPayload>,
    pub malformed: bool,
}

impl AdapterEdge {
    fn transition(&mut self, unit: Unit, from: NaFsmState, to: NaFsmState) {
        if from != to {
            self.transitions.push((unit, from, to));
        }
    }
}

/// The NI-facing side shared by master and slave adapters.
pub trait NetworkAdapter {
    fn transmitter(&mut self) -> &mut NiTransmitter;
    fn receiver(&mut self) -> &mut NiReceiver;
    /// The packet offered on the transmit pair while its req is high.
    fn outgoing(&self) -> Option<&[Flit; FLITS_PER_PACKET]>;
    fn drive_tx_ack(&mut self, level: bool, now: SimTime) -> Option<SimTime>;
    fn drive_rx_req(&mut self, level: bool, now: SimTime) -> Option<SimTime>;
    fn is_idle(&self) -> bool;
    fn counters(&self) -> AdapterCounters;
}

macro_rules! network_adapter {
    ($t:ty) => {
        impl NetworkAdapter for $t {
            fn transmitter(&mut self) -> &mut NiTransmitter {
                &mut self.ni_tx
            }
            fn receiver(&mut self) -> &mut NiReceiver {
                &mut self.ni_rx
            }
            fn outgoing(&self) -> Option<&[Flit; FLITS_PER_PACKET]> {
                self.tx_buffer()
            }
            fn drive_tx_ack(&mut self, level: bool, now: SimTime) -> Option<SimTime> {
                <$t>::drive_tx_ack(self, level, now)
            }
            fn drive_rx_req(&mut self, level: bool, now: SimTime) -> Option<SimTime> {
                <$t>::drive_rx_req(self, level, now)
            }
            fn is_idle(&self) -> bool {
                <$t>::is_idle(self)
            }
            fn counters(&self) -> AdapterCounters {
                <$t>::counters(self)
            }
        }
    };
}

network_adapter!(MasterAdapter);
network_adapter!(SlaveAdapter);
