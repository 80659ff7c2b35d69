// SPDX-License-Identifier: Apache-2.0

use std::collections::VecDeque;

use super::AdapterError;
use crate::packet::{Flit, FlitKind, FLITS_PER_PACKET};

/// Asynchronous transmitter. Takes a packet from the CI on req↑, streams it
/// to the router and then raises its ack towards the CI.
#[derive(Debug, Clone, Default)]
pub struct NiTransmitter {
    queue: VecDeque<Flit>,
    streaming: bool,
    /// Level driven back to the CI.
    pub ack: bool,
}

impl NiTransmitter {
    pub fn begin(&mut self, flits: &[Flit]) -> Result<(), AdapterError> {
        if self.streaming || self.ack {
            return Err(AdapterError::TransmitterBusy);
        }
        self.queue.extend(flits.iter().copied());
        self.streaming = true;
        Ok(())
    }

    pub fn next_flit(&mut self) -> Option<Flit> {
        self.queue.pop_front()
    }

    /// True once every flit has been handed to the link.
    pub fn drained(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn is_streaming(&self) -> bool {
        self.streaming
    }

    pub fn finish(&mut self) {
        self.streaming = false;
        self.ack = true;
    }

    pub fn is_idle(&self) -> bool {
        !self.streaming && !self.ack && self.queue.is_empty()
    }
}

/// Asynchronous receiver. Always accepts flits from the router, reassembles
/// packets and offers them to the CI one at a time.
#[derive(Debug, Clone, Default)]
pub struct NiReceiver {
    assembling: Vec<Flit>,
    ready: VecDeque<Vec<Flit>>,
    /// Level driven towards the CI.
    pub req: bool,
    /// The CI handshake for the front packet has not closed yet.
    pub busy: bool,
}

impl NiReceiver {
    /// Returns true when `flit` completed a packet.
    pub fn push(&mut self, flit: Flit) -> bool {
        self.assembling.push(flit);
        if flit.kind == FlitKind::Tail || self.assembling.len() > FLITS_PER_PACKET {
            self.ready.push_back(std::mem::take(&mut self.assembling));
            return true;
        }
        false
    }

    pub fn front(&self) -> Option<&[Flit]> {
        self.ready.front().map(Vec::as_slice)
    }

    pub fn pop(&mut self) -> Option<Vec<Flit>> {
        self.ready.pop_front()
    }

    pub fn has_ready(&self) -> bool {
        !self.ready.is_empty()
    }

    pub fn is_idle(&self) -> bool {
        self.assembling.is_empty() && self.ready.is_empty() && !self.req && !self.busy
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::{serialize, Packet, Status, TransactionPayload, TxnKind};
    use crate::topology::SourceRoute;

    #[test]
    fn receiver_reassembles_packets_in_order() {
        let mut rx = NiReceiver::default();
        let p = Packet {
            route: SourceRoute::EMPTY,
            return_route: SourceRoute::EMPTY,
            txn: TransactionPayload {
                kind: TxnKind::WriteAck,
                adr: 1,
                data: 2,
                sel: 0xF,
                tag: 3,
                status: Status::Ok,
            },
        };
        let flits = serialize(&p);
        for (i, f) in flits.iter().chain(flits.iter()).enumerate() {
            assert_eq!(rx.push(*f), i % 5 == 4);
        }
        assert_eq!(rx.pop().unwrap(), flits.to_vec());
        assert!(rx.has_ready());
    }

    #[test]
    fn transmitter_refuses_second_packet() {
        let mut tx = NiTransmitter::default();
        let f = [Flit::new(FlitKind::Head, 0)];
        tx.begin(&f).unwrap();
        assert_eq!(tx.begin(&f), Err(AdapterError::TransmitterBusy));
        assert!(tx.next_flit().is_some());
        tx.finish();
        assert!(tx.ack && !tx.is_idle());
    }
}
