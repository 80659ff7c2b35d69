// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use super::WbSignals;
use crate::kernel::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WbField {
    Address,
    WriteData,
    Select,
    WriteEnable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WbRule {
    StbWithoutCyc,
    /// A master-driven signal moved between strobe assertion and ack.
    Unstable(WbField),
    AckWithoutStb,
}

impl WbRule {
    pub fn name(self) -> &'static str {
        match self {
            WbRule::StbWithoutCyc => "stb-without-cyc",
            WbRule::Unstable(WbField::Address) => "unstable-address",
            WbRule::Unstable(WbField::WriteData) => "unstable-data",
            WbRule::Unstable(WbField::Select) => "unstable-sel",
            WbRule::Unstable(WbField::WriteEnable) => "unstable-we",
            WbRule::AckWithoutStb => "ack-without-stb",
        }
    }
}

impl fmt::Display for WbRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub time: SimTime,
    pub rule: WbRule,
}

/// Observes one bus once per clock edge and reports rule violations. It
/// never stops the simulation.
#[derive(Debug, Clone, Default)]
pub struct WbChecker {
    prev: Option<WbSignals>,
    violations: Vec<Violation>,
}

impl WbChecker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, s: &WbSignals, edge_time: SimTime) -> Vec<Violation> {
        let mut found = Vec::new();
        let mut flag = |rule| {
            found.push(Violation {
                time: edge_time,
                rule,
            })
        };
        if s.stb && !s.cyc {
            flag(WbRule::StbWithoutCyc);
        }
        if s.ack && !s.stb {
            flag(WbRule::AckWithoutStb);
        }
        if let Some(p) = self.prev {
            // the cycle continues: strobe held and not yet acknowledged
            if p.stb && s.stb && !p.ack {
                if p.adr != s.adr {
                    flag(WbRule::Unstable(WbField::Address));
                }
                if p.we != s.we {
                    flag(WbRule::Unstable(WbField::WriteEnable));
                }
                if p.sel != s.sel {
                    flag(WbRule::Unstable(WbField::Select));
                }
                if p.we && s.we && p.dat_w != s.dat_w {
                    flag(WbRule::Unstable(WbField::WriteData));
                }
            }
        }
        self.prev = Some(*s);
        self.violations.extend_from_slice(&found);
        found
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }
}
