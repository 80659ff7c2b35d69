// SPDX-License-Identifier: Apache-2.0

//! Packet wire format.
//!
//! Every packet is five 32-bit flits:
//!
//! ```text
//! Head   forward route (packed hop codes)
//! Body   return route (packed hop codes)
//! Body   WISHBONE address
//! Body   data word
//! Tail   [1:0] kind  [5:2] sel  [13:6] tag  [14] status
//!        [19:15] forward hop count  [24:20] return hop count
//! ```

use thiserror::Error;

use crate::topology::SourceRoute;

pub const FLITS_PER_PACKET: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlitKind {
    Head,
    Body,
    Tail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Flit {
    pub kind: FlitKind,
    pub payload: u32,
}

impl Flit {
    pub const fn new(kind: FlitKind, payload: u32) -> Self {
        Flit { kind, payload }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TxnKind {
    ReadRequest = 0,
    WriteRequest = 1,
    ReadResponse = 2,
    WriteAck = 3,
}

impl TxnKind {
    pub fn is_request(self) -> bool {
        matches!(self, TxnKind::ReadRequest | TxnKind::WriteRequest)
    }

    /// The response kind answering this request kind.
    pub fn response(self) -> Option<TxnKind> {
        match self {
            TxnKind::ReadRequest => Some(TxnKind::ReadResponse),
            TxnKind::WriteRequest => Some(TxnKind::WriteAck),
            _ => None,
        }
    }

    fn from_bits(bits: u32) -> TxnKind {
        match bits & 0b11 {
            0 => TxnKind::ReadRequest,
            1 => TxnKind::WriteRequest,
            2 => TxnKind::ReadResponse,
            _ => TxnKind::WriteAck,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Status {
    #[default]
    Ok,
    Err,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransactionPayload {
    pub kind: TxnKind,
    pub adr: u32,
    pub data: u32,
    /// 4-bit byte lane select.
    pub sel: u8,
    pub tag: u8,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Packet {
    pub route: SourceRoute,
    pub return_route: SourceRoute,
    pub txn: TransactionPayload,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PacketError {
    #[error("expected {FLITS_PER_PACKET} flits, got {0}")]
    WrongLength(usize),
    #[error("flit {index} has kind {found:?}, expected {expected:?}")]
    WrongKind {
        index: usize,
        found: FlitKind,
        expected: FlitKind,
    },
    #[error("tail flit has reserved bits set: {0:#010x}")]
    ReservedBits(u32),
    #[error("route field inconsistent with its hop count")]
    BadRoute,
}

const EXPECTED: [FlitKind; FLITS_PER_PACKET] = [
    FlitKind::Head,
    FlitKind::Body,
    FlitKind::Body,
    FlitKind::Body,
    FlitKind::Tail,
];

const TAIL_USED_BITS: u32 = (1 << 25) - 1;

pub fn serialize(p: &Packet) -> [Flit; FLITS_PER_PACKET] {
    let t = &p.txn;
    let tail = (t.kind as u32)
        | ((t.sel as u32 & 0xF) << 2)
        | ((t.tag as u32) << 6)
        | (matches!(t.status, Status::Err) as u32) << 14
        | ((p.route.hops() as u32 & 0x1F) << 15)
        | ((p.return_route.hops() as u32 & 0x1F) << 20);
    [
        Flit::new(FlitKind::Head, p.route.packed()),
        Flit::new(FlitKind::Body, p.return_route.packed()),
        Flit::new(FlitKind::Body, t.adr),
        Flit::new(FlitKind::Body, t.data),
        Flit::new(FlitKind::Tail, tail),
    ]
}

pub fn deserialize(flits: &[Flit]) -> Result<Packet, PacketError> {
    if flits.len() != FLITS_PER_PACKET {
        return Err(PacketError::WrongLength(flits.len()));
    }
    for (index, (f, expected)) in flits.iter().zip(EXPECTED).enumerate() {
        if f.kind != expected {
            return Err(PacketError::WrongKind {
                index,
                found: f.kind,
                expected,
            });
        }
    }
    let tail = flits[4].payload;
    if tail & !TAIL_USED_BITS != 0 {
        return Err(PacketError::ReservedBits(tail));
    }
    let hops = ((tail >> 15) & 0x1F) as u8;
    let return_hops = ((tail >> 20) & 0x1F) as u8;
    let route = SourceRoute::new(flits[0].payload, hops).map_err(|_| PacketError::BadRoute)?;
    let return_route =
        SourceRoute::new(flits[1].payload, return_hops).map_err(|_| PacketError::BadRoute)?;
    Ok(Packet {
        route,
        return_route,
        txn: TransactionPayload {
            kind: TxnKind::from_bits(tail),
            adr: flits[2].payload,
            data: flits[3].payload,
            sel: ((tail >> 2) & 0xF) as u8,
            tag: ((tail >> 6) & 0xFF) as u8,
            status: if tail & (1 << 14) != 0 {
                Status::Err
            } else {
                Status::Ok
            },
        },
    })
}
