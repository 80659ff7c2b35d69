// SPDX-License-Identifier: Apache-2.0

//! Five-port router.
//!
//! Input ports are combinational header decoders; a per-output mutex
//! arbitrates between inputs and the granted input streams its packet into
//! the output FIFO until the tail flit passes. Under [`DropPolicy::DropOnFull`]
//! a packet whose head is granted while the FIFO cannot hold a whole packet is
//! discarded in full.
//!
//! The router is a passive state machine: the simulation feeds it flits offered
//! on input channels and it answers whether each flit was consumed.

use std::collections::VecDeque;

use thiserror::Error;

use crate::kernel::SimTime;
use crate::packet::{Flit, FlitKind, FLITS_PER_PACKET};
use crate::topology::{decode_head_word, Direction};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum DropPolicy {
    #[default]
    DropOnFull,
    Backpressure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouterConfig {
    /// Output FIFO capacity in flits.
    pub fifo_depth: usize,
    /// Delay of one handshake phase on an asynchronous channel, in ps.
    pub channel_delay: u64,
    pub drop_policy: DropPolicy,
}

impl Default for RouterConfig {
    fn default() -> Self {
        RouterConfig {
            fifo_depth: 8,
            channel_delay: 1_000,
            drop_policy: DropPolicy::DropOnFull,
        }
    }
}

impl RouterConfig {
    pub fn validate(&self) -> Result<(), RouterError> {
        if self.fifo_depth == 0 {
            return Err(RouterError::ZeroDepth);
        }
        if self.drop_policy == DropPolicy::DropOnFull && self.fifo_depth < FLITS_PER_PACKET {
            return Err(RouterError::FifoTooShallow(self.fifo_depth));
        }
        if self.channel_delay == 0 {
            return Err(RouterError::ZeroDelay);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RouterError {
    #[error("fifo depth must be positive")]
    ZeroDepth,
    #[error("fifo depth {0} cannot hold a whole packet under drop-on-full")]
    FifoTooShallow(usize),
    #[error("channel delay must be positive")]
    ZeroDelay,
    #[error("{port} already holds or waits for output {output}")]
    DoubleRequest { output: Direction, port: Direction },
    #[error("{port} released output {output} without holding it")]
    NotHolder { output: Direction, port: Direction },
    #[error("{kind:?} flit on {port} without a granted output")]
    NoGrant { port: Direction, kind: FlitKind },
    #[error("flit offered on {0} while the previous one is still held")]
    PortBusy(Direction),
}

#[derive(Debug, Clone)]
pub struct Fifo {
    capacity: usize,
    items: VecDeque<Flit>,
}

impl Fifo {
    pub fn new(capacity: usize) -> Self {
        Fifo {
            capacity,
            items: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn free(&self) -> usize {
        self.capacity - self.items.len()
    }

    pub fn push(&mut self, flit: Flit) -> Result<(), Flit> {
        if self.items.len() == self.capacity {
            return Err(flit);
        }
        self.items.push_back(flit);
        Ok(())
    }

    pub fn pop(&mut self) -> Option<Flit> {
        self.items.pop_front()
    }

    pub fn front(&self) -> Option<&Flit> {
        self.items.front()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arbitration {
    Granted,
    Queued,
}

/// Mutual exclusion over one output. Waiters are served first come first
/// served; requests made at the same instant are ordered by port priority.
#[derive(Debug, Clone, Default)]
pub struct OutputMutex {
    holder: Option<Direction>,
    waiters: Vec<(SimTime, Direction)>,
}

impl OutputMutex {
    pub fn holder(&self) -> Option<Direction> {
        self.holder
    }

    pub fn waiters(&self) -> impl Iterator<Item = Direction> + '_ {
        self.waiters.iter().map(|(_, d)| *d)
    }

    pub fn request(&mut self, requester: Direction, now: SimTime) -> Result<(), RouterError> {
        if self.holder == Some(requester) || self.waiters.iter().any(|(_, d)| *d == requester) {
            return Err(RouterError::DoubleRequest {
                output: Direction::Local,
                port: requester,
            });
        }
        let key = (now, requester);
        let at = self.waiters.partition_point(|w| *w <= key);
        self.waiters.insert(at, key);
        Ok(())
    }

    /// Grants the output to the first waiter if it is free.
    pub fn resolve(&mut self) -> Option<Direction> {
        if self.holder.is_some() || self.waiters.is_empty() {
            return None;
        }
        let (_, next) = self.waiters.remove(0);
        self.holder = Some(next);
        Some(next)
    }

    pub fn arbitrate(
        &mut self,
        requester: Direction,
        now: SimTime,
    ) -> Result<Arbitration, RouterError> {
        self.request(requester, now)?;
        self.resolve();
        Ok(if self.holder == Some(requester) {
            Arbitration::Granted
        } else {
            Arbitration::Queued
        })
    }

    pub fn release(&mut self, port: Direction) -> Result<(), RouterError> {
        if self.holder != Some(port) {
            return Err(RouterError::NotHolder {
                output: Direction::Local,
                port,
            });
        }
        self.holder = None;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputState {
    Idle,
    AwaitingGrant { out: Direction },
    Streaming { out: Direction },
    Discarding,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RouterCounters {
    pub forwarded_packets: u64,
    pub drops: u64,
    pub malformed: u64,
}

/// What happened to a consumed flit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlitAction {
    Enqueued(Direction),
    /// Head of a packet dropped for lack of FIFO space.
    Dropped(Direction),
    /// Head whose decoded output does not exist.
    Malformed(Direction),
    /// Body or tail of a dropped or malformed packet.
    Discarded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Offer {
    /// Flit consumed; the input channel may acknowledge it. `released` names
    /// an output whose mutex became free.
    Accepted {
        action: FlitAction,
        released: Option<Direction>,
    },
    /// Flit held at the input. `requested` names an output that gained a
    /// waiter and needs arbitration.
    Held { requested: Option<Direction> },
}

#[derive(Debug, Clone)]
pub struct Router {
    config: RouterConfig,
    present: [bool; 5],
    inputs: [InputState; 5],
    held: [Option<Flit>; 5],
    mutexes: [OutputMutex; 5],
    fifos: [Fifo; 5],
    /// Input stalled on a full FIFO, per output.
    fifo_waiter: [Option<Direction>; 5],
    counters: RouterCounters,
}

impl Router {
    /// `present` lists which outputs lead somewhere (neighbour or adapter).
    pub fn new(config: RouterConfig, present: [bool; 5]) -> Self {
        Router {
            config,
            present,
            inputs: [InputState::Idle; 5],
            held: [None; 5],
            mutexes: Default::default(),
            fifos: std::array::from_fn(|_| Fifo::new(config.fifo_depth)),
            fifo_waiter: [None; 5],
            counters: RouterCounters::default(),
        }
    }

    pub fn config(&self) -> &RouterConfig {
        &self.config
    }

    pub fn counters(&self) -> RouterCounters {
        self.counters
    }

    pub fn input_state(&self, port: Direction) -> InputState {
        self.inputs[port.index()]
    }

    pub fn fifo(&self, out: Direction) -> &Fifo {
        &self.fifos[out.index()]
    }

    pub fn mutex(&self, out: Direction) -> &OutputMutex {
        &self.mutexes[out.index()]
    }

    pub fn is_idle(&self) -> bool {
        self.inputs.iter().all(|s| *s == InputState::Idle)
            && self.fifos.iter().all(Fifo::is_empty)
            && self.held.iter().all(Option::is_none)
    }

    /// A flit offered on input `port`.
    pub fn input_accept(
        &mut self,
        port: Direction,
        flit: Flit,
        now: SimTime,
    ) -> Result<Offer, RouterError> {
        let p = port.index();
        if self.held[p].is_some() {
            return Err(RouterError::PortBusy(port));
        }
        match self.inputs[p] {
            InputState::Idle => {
                if flit.kind != FlitKind::Head {
                    return Err(RouterError::NoGrant {
                        port,
                        kind: flit.kind,
                    });
                }
                let (out, rest) = decode_head_word(flit.payload, port);
                if !self.present[out.index()] {
                    self.counters.malformed += 1;
                    self.inputs[p] = InputState::Discarding;
                    return Ok(Offer::Accepted {
                        action: FlitAction::Malformed(out),
                        released: None,
                    });
                }
                self.mutexes[out.index()]
                    .request(port, now)
                    .map_err(|_| RouterError::DoubleRequest { output: out, port })?;
                self.inputs[p] = InputState::AwaitingGrant { out };
                self.held[p] = Some(Flit::new(FlitKind::Head, rest));
                Ok(Offer::Held {
                    requested: Some(out),
                })
            }
            InputState::AwaitingGrant { .. } => Err(RouterError::PortBusy(port)),
            InputState::Streaming { out } => {
                if flit.kind == FlitKind::Head {
                    return Err(RouterError::PortBusy(port));
                }
                Ok(self.push(port, out, flit))
            }
            InputState::Discarding => {
                if flit.kind == FlitKind::Tail {
                    self.inputs[p] = InputState::Idle;
                }
                Ok(Offer::Accepted {
                    action: FlitAction::Discarded,
                    released: None,
                })
            }
        }
    }

    fn push(&mut self, port: Direction, out: Direction, flit: Flit) -> Offer {
        let fifo = &mut self.fifos[out.index()];
        if fifo.push(flit).is_err() {
            debug_assert_eq!(self.config.drop_policy, DropPolicy::Backpressure);
            self.held[port.index()] = Some(flit);
            self.fifo_waiter[out.index()] = Some(port);
            return Offer::Held { requested: None };
        }
        let mut released = None;
        if flit.kind == FlitKind::Tail {
            self.mutexes[out.index()]
                .release(port)
                .expect("streaming input holds its output");
            self.inputs[port.index()] = InputState::Idle;
            self.counters.forwarded_packets += 1;
            released = Some(out);
        }
        Offer::Accepted {
            action: FlitAction::Enqueued(out),
            released,
        }
    }

    /// Runs arbitration for `out`. Returns the granted input and the fate of
    /// its held head flit.
    pub fn arbitrate(&mut self, out: Direction) -> Option<(Direction, Offer)> {
        let port = self.mutexes[out.index()].resolve()?;
        let p = port.index();
        debug_assert_eq!(self.inputs[p], InputState::AwaitingGrant { out });
        let head = self.held[p].take().expect("waiting input holds its head");
        self.inputs[p] = InputState::Streaming { out };
        if self.config.drop_policy == DropPolicy::DropOnFull
            && self.fifos[out.index()].free() < FLITS_PER_PACKET
        {
            self.counters.drops += 1;
            self.mutexes[out.index()]
                .release(port)
                .expect("just granted");
            self.inputs[p] = InputState::Discarding;
            return Some((
                port,
                Offer::Accepted {
                    action: FlitAction::Dropped(out),
                    released: Some(out),
                },
            ));
        }
        Some((port, self.push(port, out, head)))
    }

    /// Removes the front flit of an output FIFO. If an input was stalled on
    /// that FIFO its flit is retried and the outcome returned.
    pub fn output_dequeue(&mut self, out: Direction) -> Option<(Flit, Option<(Direction, Offer)>)> {
        let flit = self.fifos[out.index()].pop()?;
        let retried = self.fifo_waiter[out.index()].take().map(|port| {
            let held = self.held[port.index()]
                .take()
                .expect("stalled input holds a flit");
            (port, self.push(port, out, held))
        });
        Some((flit, retried))
    }
}
