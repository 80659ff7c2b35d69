// SPDX-License-Identifier: Apache-2.0

//! Four-phase bundled-data channel: req↑, ack↑, req↓, ack↓.

use std::fmt;

use super::AdapterError;
use crate::kernel::SimTime;
use crate::packet::Flit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HandshakeEdge {
    ReqRise,
    AckRise,
    ReqFall,
    AckFall,
}

impl HandshakeEdge {
    const ORDER: [HandshakeEdge; 4] = [
        HandshakeEdge::ReqRise,
        HandshakeEdge::AckRise,
        HandshakeEdge::ReqFall,
        HandshakeEdge::AckFall,
    ];

    pub fn signal(self) -> &'static str {
        match self {
            HandshakeEdge::ReqRise | HandshakeEdge::ReqFall => "req",
            HandshakeEdge::AckRise | HandshakeEdge::AckFall => "ack",
        }
    }

    pub fn level(self) -> bool {
        matches!(self, HandshakeEdge::ReqRise | HandshakeEdge::AckRise)
    }

    pub fn from_signal(signal: &str, level: bool) -> Option<HandshakeEdge> {
        Some(match (signal, level) {
            ("req", true) => HandshakeEdge::ReqRise,
            ("ack", true) => HandshakeEdge::AckRise,
            ("req", false) => HandshakeEdge::ReqFall,
            ("ack", false) => HandshakeEdge::AckFall,
            _ => return None,
        })
    }

    fn next(self) -> HandshakeEdge {
        let i = Self::ORDER.iter().position(|e| *e == self).unwrap();
        Self::ORDER[(i + 1) % 4]
    }
}

impl fmt::Display for HandshakeEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sig={} level={}", self.signal(), self.level() as u8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandshakeRole {
    Initiator,
    Responder,
}

/// Levels and data of one asynchronous channel. Data may only change while
/// the channel is idle (req = ack = 0).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AsyncPort {
    pub req: bool,
    pub ack: bool,
    pub data: Option<Flit>,
}

impl AsyncPort {
    pub fn is_idle(&self) -> bool {
        !self.req && !self.ack
    }

    /// Places data on the channel ahead of req↑.
    pub fn load(&mut self, flit: Flit) -> Result<(), AdapterError> {
        if !self.is_idle() || self.data.is_some() {
            return Err(AdapterError::ChannelBusy);
        }
        self.data = Some(flit);
        Ok(())
    }

    /// Applies one edge, rejecting any that breaks the four-phase order.
    pub fn apply(&mut self, edge: HandshakeEdge) -> Result<(), AdapterError> {
        let legal = match edge {
            HandshakeEdge::ReqRise => !self.req && !self.ack && self.data.is_some(),
            HandshakeEdge::AckRise => self.req && !self.ack,
            HandshakeEdge::ReqFall => self.req && self.ack,
            HandshakeEdge::AckFall => !self.req && self.ack,
        };
        if !legal {
            return Err(AdapterError::HandshakeOrder {
                edge,
                req: self.req,
                ack: self.ack,
            });
        }
        match edge {
            HandshakeEdge::ReqRise => self.req = true,
            HandshakeEdge::AckRise => self.ack = true,
            HandshakeEdge::ReqFall => self.req = false,
            HandshakeEdge::AckFall => {
                self.ack = false;
                self.data = None;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transfer {
    pub edges: Vec<(SimTime, HandshakeEdge)>,
    pub flit: Flit,
    pub completed_at: SimTime,
}

/// Drives one complete transfer with a responsive partner, every phase
/// taking `delay` ps. The initiator starts from an idle port with `flit`;
/// the responder starts from a port whose req is already high.
pub fn handshake_drive(
    port: &mut AsyncPort,
    role: HandshakeRole,
    flit: Option<Flit>,
    start: SimTime,
    delay: u64,
) -> Result<Transfer, AdapterError> {
    let sequence: &[HandshakeEdge] = match role {
        HandshakeRole::Initiator => {
            port.load(flit.ok_or(AdapterError::ChannelBusy)?)?;
            &HandshakeEdge::ORDER
        }
        HandshakeRole::Responder => {
            if !port.req || port.ack {
                return Err(AdapterError::HandshakeOrder {
                    edge: HandshakeEdge::AckRise,
                    req: port.req,
                    ack: port.ack,
                });
            }
            &HandshakeEdge::ORDER[1..]
        }
    };
    let delivered = port.data.ok_or(AdapterError::ChannelBusy)?;
    let mut t = start;
    let mut edges = Vec::with_capacity(4);
    for &edge in sequence {
        t = t + delay;
        port.apply(edge)?;
        edges.push((t, edge));
    }
    Ok(Transfer {
        edges,
        flit: delivered,
        completed_at: t,
    })
}

/// Checks an edge log of one channel: complete req↑ ack↑ req↓ ack↓ cycles
/// with strictly increasing times inside each transfer. A trailing partial
/// transfer is allowed. Returns the number of complete transfers.
pub fn audit_channel(edges: &[(SimTime, HandshakeEdge)]) -> Result<usize, AdapterError> {
    let mut expected = HandshakeEdge::ReqRise;
    let mut last: Option<SimTime> = None;
    let mut complete = 0;
    for &(t, edge) in edges {
        if edge != expected {
            return Err(AdapterError::AuditOrder { time: t, edge });
        }
        if let Some(prev) = last {
            if t <= prev {
                return Err(AdapterError::AuditTiming { time: t, edge });
            }
        }
        last = if edge == HandshakeEdge::AckFall {
            complete += 1;
            None
        } else {
            Some(t)
        };
        expected = edge.next();
    }
    Ok(complete)
}
