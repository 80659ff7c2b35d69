// SPDX-License-Identifier: Apache-2.0

//! WISHBONE classic single read/write cycles: the signal bundle, bus
//! functional models for a master core and a memory slave, a rule checker
//! and the end-to-end flow-control engine run by the master core.

mod bfm;
mod checker;
mod flow;

use std::fmt;

pub use bfm::{
    CoreEvent, MasterCore, MasterFault, MasterWorkload, SlaveCore, SlaveMemory, WorkloadMode,
};
pub use checker::{Violation, WbChecker, WbField, WbRule};
pub use flow::{FcAction, FcEvent, FlowControlConfig, FlowControlState, FlowError, Outstanding};

/// One bus as seen at a clock edge.
///
/// `tgc` is the cycle tag the master presents alongside the address; the
/// network adapter copies it into the request packet. `err` is the error
/// termination the adapter raises when a cycle cannot be sent at all.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct WbSignals {
    pub cyc: bool,
    pub stb: bool,
    pub we: bool,
    pub adr: u32,
    pub dat_w: u32,
    pub dat_r: u32,
    pub sel: u8,
    pub ack: bool,
    pub tgc: u8,
    pub err: bool,
}

impl WbSignals {
    pub fn in_cycle(&self) -> bool {
        self.cyc && self.stb
    }
}

impl fmt::Display for WbSignals {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cyc={} stb={} we={} adr={:#010x} dat_w={:#010x} sel={:#x} ack={} dat_r={:#010x} tgc={} err={}",
            self.cyc as u8,
            self.stb as u8,
            self.we as u8,
            self.adr,
            self.dat_w,
            self.sel,
            self.ack as u8,
            self.dat_r,
            self.tgc,
            self.err as u8
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WbOpKind {
    Read,
    Write,
}

impl WbOpKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WbOpKind::Read => "read",
            WbOpKind::Write => "write",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WbOp {
    pub kind: WbOpKind,
    pub adr: u32,
    pub data: u32,
    pub sel: u8,
}

impl WbOp {
    pub fn write(adr: u32, data: u32, sel: u8) -> Self {
        WbOp {
            kind: WbOpKind::Write,
            adr,
            data,
            sel,
        }
    }

    pub fn read(adr: u32) -> Self {
        WbOp {
            kind: WbOpKind::Read,
            adr,
            data: 0,
            sel: 0xF,
        }
    }

    /// Top four address bits, which select the target slave.
    pub fn prefix(&self) -> u8 {
        (self.adr >> 28) as u8
    }
}

/// Expands a byte-lane select into a 32-bit mask.
pub fn sel_mask(sel: u8) -> u32 {
    (0..4)
        .filter(|b| sel & (1 << b) != 0)
        .fold(0, |m, b| m | (0xFF << (8 * b)))
}
