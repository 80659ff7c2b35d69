// SPDX-License-Identifier: Apache-2.0

//! End-to-end flow control: one outstanding transaction per master, a
//! retransmission timer, and tag matching on the response that doubles as
//! the delivery acknowledgment.

use thiserror::Error;

use super::WbOp;
use crate::kernel::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowControlConfig {
    /// Retransmission timeout in ps.
    pub timeout: u64,
    pub max_retries: u32,
}

impl Default for FlowControlConfig {
    fn default() -> Self {
        FlowControlConfig {
            timeout: 1_000_000,
            max_retries: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outstanding {
    pub tag: u8,
    pub op: WbOp,
    pub sent_at: SimTime,
    pub retries: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcEvent {
    Sent { tag: u8, op: WbOp, at: SimTime },
    Response { tag: u8 },
    Timer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcAction {
    None,
    Complete,
    Retransmit,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("transaction sent while tag {0} is still outstanding")]
    AlreadyOutstanding(u8),
}

#[derive(Debug, Clone, Default)]
pub struct FlowControlState {
    pub config: FlowControlConfig,
    pub outstanding: Option<Outstanding>,
    pub retransmits: u64,
    pub failures: u64,
    pub completed: u64,
    /// Responses whose tag did not match the outstanding transaction.
    pub stale: u64,
    /// Responses arriving with nothing outstanding.
    pub spurious: u64,
}

impl FlowControlState {
    pub fn new(config: FlowControlConfig) -> Self {
        FlowControlState {
            config,
            ..Default::default()
        }
    }

    pub fn step(&mut self, event: FcEvent) -> Result<FcAction, FlowError> {
        Ok(match event {
            FcEvent::Sent { tag, op, at } => {
                if let Some(o) = self.outstanding {
                    return Err(FlowError::AlreadyOutstanding(o.tag));
                }
                self.outstanding = Some(Outstanding {
                    tag,
                    op,
                    sent_at: at,
                    retries: 0,
                });
                FcAction::None
            }
            FcEvent::Response { tag } => match self.outstanding {
                None => {
                    self.spurious += 1;
                    FcAction::None
                }
                Some(o) if o.tag != tag => {
                    self.stale += 1;
                    FcAction::None
                }
                Some(_) => {
                    self.outstanding = None;
                    self.completed += 1;
                    FcAction::Complete
                }
            },
            FcEvent::Timer => match self.outstanding.as_mut() {
                None => FcAction::None,
                Some(o) if o.retries < self.config.max_retries => {
                    o.retries += 1;
                    self.retransmits += 1;
                    FcAction::Retransmit
                }
                Some(_) => {
                    self.outstanding = None;
                    self.failures += 1;
                    FcAction::Fail
                }
            },
        })
    }

    /// Gives up on the outstanding transaction without a timer, e.g. when
    /// the adapter could not route it.
    pub fn abandon(&mut self) {
        if self.outstanding.take().is_some() {
            self.failures += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sent(fc: &mut FlowControlState, tag: u8) {
        let ev = FcEvent::Sent {
            tag,
            op: WbOp::read(0x3000_0000),
            at: SimTime(0),
        };
        assert_eq!(fc.step(ev).unwrap(), FcAction::None);
    }

    #[test]
    fn response_completes() {
        let mut fc = FlowControlState::default();
        sent(&mut fc, 7);
        assert_eq!(
            fc.step(FcEvent::Response { tag: 7 }).unwrap(),
            FcAction::Complete
        );
        assert!(fc.outstanding.is_none());
    }

    #[test]
    fn timeout_retransmits() {
        let mut fc = FlowControlState::default();
        sent(&mut fc, 1);
        assert_eq!(fc.step(FcEvent::Timer).unwrap(), FcAction::Retransmit);
        assert_eq!(fc.retransmits, 1);
        assert_eq!(fc.outstanding.unwrap().tag, 1);
    }

    #[test]
    fn retries_exhaust_on_ninth_timer() {
        let mut fc = FlowControlState::default();
        sent(&mut fc, 1);
        for _ in 0..8 {
            assert_eq!(fc.step(FcEvent::Timer).unwrap(), FcAction::Retransmit);
        }
        assert_eq!(fc.step(FcEvent::Timer).unwrap(), FcAction::Fail);
        assert_eq!(fc.failures, 1);
    }

    #[test]
    fn zero_retries_fail_at_first_timer() {
        let mut fc = FlowControlState::new(FlowControlConfig {
            max_retries: 0,
            ..Default::default()
        });
        sent(&mut fc, 1);
        assert_eq!(fc.step(FcEvent::Timer).unwrap(), FcAction::Fail);
    }

    #[test]
    fn stale_and_spurious_are_counted() {
        let mut fc = FlowControlState::default();
        assert_eq!(
            fc.step(FcEvent::Response { tag: 3 }).unwrap(),
            FcAction::None
        );
        assert_eq!(fc.spurious, 1);
        sent(&mut fc, 4);
        assert_eq!(
            fc.step(FcEvent::Response { tag: 3 }).unwrap(),
            FcAction::None
        );
        assert_eq!(fc.stale, 1);
        assert!(fc.outstanding.is_some());
        let again = FcEvent::Sent {
            tag: 5,
            op: WbOp::read(0),
            at: SimTime(1),
        };
        assert_eq!(fc.step(again), Err(FlowError::AlreadyOutstanding(4)));
    }
}
