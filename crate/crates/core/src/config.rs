// SPDX-License-Identifier: Apache-2.0

//! Scenario configuration files (TOML).
//!
//! ```toml
//! seed = 7
//! run_until_ps = 10_000_000_000
//!
//! [mesh]
//! cols = 2
//! rows = 2
//!
//! [router]
//! fifo_depth = 8
//! channel_delay_ps = 1000
//! drop_policy = "drop-on-full"   # or "backpressure"
//!
//! [flow_control]
//! timeout_ps = 1_000_000
//! max_retries = 8
//!
//! [[node]]
//! index = 0
//! role = "master"
//! workload = { mode = "scripted", ops = [
//!     { kind = "write", adr = 0x30000010, data = 0xDEADBEEF },
//!     { kind = "read", adr = 0x30000010 },
//! ] }
//!
//! [[node]]
//! index = 3
//! role = "slave"
//! wait_states = 1
//!
//! [[lut]]
//! prefix = 3
//! node = 3
//! ```
//!
//! Nodes that are not listed are idle. Random workloads
//! (`mode = "random"`, `count`, optional `seed` and `slaves`) take the global
//! seed unless they name their own, and target every lut slave unless they
//! list `slaves`.

use std::fmt;
use std::ops::Range;

use serde::Deserialize;
use toml::Spanned;

use crate::kernel::{SimTime, DEFAULT_PERIOD_PS};
use crate::router::{DropPolicy, RouterConfig};
use crate::topology::{MeshDims, TopologyError, MAX_NODES};
use crate::wishbone::{FlowControlConfig, MasterWorkload, WbOp, WorkloadMode};

pub const DEFAULT_RUN_UNTIL_PS: u64 = 10_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeRole {
    Master,
    Slave,
    Idle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeConfig {
    pub role: NodeRole,
    pub period_ps: u64,
    pub phase_ps: u64,
    pub wait_states: u32,
    pub workload: MasterWorkload,
    /// Random workload without its own seed; follows [`SimConfig::seed`].
    pub inherits_seed: bool,
}

impl NodeConfig {
    pub fn idle() -> Self {
        NodeConfig {
            role: NodeRole::Idle,
            period_ps: DEFAULT_PERIOD_PS,
            phase_ps: 0,
            wait_states: 0,
            workload: MasterWorkload::scripted(Vec::new()),
            inherits_seed: false,
        }
    }

    pub fn master(ops: Vec<WbOp>) -> Self {
        NodeConfig {
            role: NodeRole::Master,
            workload: MasterWorkload::scripted(ops),
            ..Self::idle()
        }
    }

    pub fn slave(wait_states: u32) -> Self {
        NodeConfig {
            role: NodeRole::Slave,
            wait_states,
            ..Self::idle()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub mesh: MeshDims,
    /// One entry per node, in index order.
    pub nodes: Vec<NodeConfig>,
    /// Address prefix to slave node.
    pub lut: Vec<(u8, usize)>,
    pub router: RouterConfig,
    pub flow_control: FlowControlConfig,
    pub run_until: SimTime,
    pub seed: u64,
}

impl SimConfig {
    /// All-idle mesh with default settings.
    pub fn new(mesh: MeshDims) -> Self {
        SimConfig {
            mesh,
            nodes: vec![NodeConfig::idle(); mesh.node_count()],
            lut: Vec::new(),
            router: RouterConfig::default(),
            flow_control: FlowControlConfig::default(),
            run_until: SimTime(DEFAULT_RUN_UNTIL_PS),
            seed: 0,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        for n in &mut self.nodes {
            if let (true, WorkloadMode::RandomUniform { seed: s, .. }) =
                (n.inherits_seed, &mut n.workload.mode)
            {
                *s = seed;
            }
        }
    }

    pub fn prefix_of(&self, slave: usize) -> Option<u8> {
        self.lut.iter().find(|(_, n)| *n == slave).map(|(p, _)| *p)
    }

    pub fn masters(&self) -> impl Iterator<Item = usize> + '_ {
        self.role_indices(NodeRole::Master)
    }

    pub fn slaves(&self) -> impl Iterator<Item = usize> + '_ {
        self.role_indices(NodeRole::Slave)
    }

    fn role_indices(&self, role: NodeRole) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(move |(_, n)| n.role == role)
            .map(|(i, _)| i)
    }
}

/// A configuration problem, with the 1-based position of the offending text
/// when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, "line {l}, column {c}: ")?;
        }
        if !self.field.is_empty() {
            write!(f, "{}: ", self.field)?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_run_until")]
    run_until_ps: u64,
    mesh: Spanned<RawMesh>,
    #[serde(default)]
    router: Option<Spanned<RawRouter>>,
    #[serde(default)]
    flow_control: Option<RawFlow>,
    #[serde(default, rename = "node")]
    nodes: Vec<Spanned<RawNode>>,
    #[serde(default)]
    lut: Vec<Spanned<RawLut>>,
}

fn default_run_until() -> u64 {
    DEFAULT_RUN_UNTIL_PS
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    cols: usize,
    rows: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
enum RawPolicy {
    DropOnFull,
    Backpressure,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRouter {
    fifo_depth: Option<usize>,
    channel_delay_ps: Option<u64>,
    drop_policy: Option<RawPolicy>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlow {
    timeout_ps: Option<u64>,
    max_retries: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    index: usize,
    role: NodeRole,
    period_ps: Option<u64>,
    phase_ps: Option<u64>,
    wait_states: Option<u32>,
    workload: Option<Spanned<RawWorkload>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
enum RawWorkload {
    Scripted {
        ops: Vec<RawOp>,
    },
    Random {
        count: usize,
        seed: Option<u64>,
        slaves: Option<Vec<usize>>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RawOpKind {
    Read,
    Write,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOp {
    kind: RawOpKind,
    adr: u32,
    #[serde(default)]
    data: u32,
    #[serde(default = "full_sel")]
    sel: u8,
}

fn full_sel() -> u8 {
    0xF
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLut {
    prefix: u8,
    node: usize,
}

struct Locator<'a> {
    text: &'a str,
}

impl Locator<'_> {
    fn at(
        &self,
        span: Option<Range<usize>>,
        field: &str,
        message: impl Into<String>,
    ) -> ConfigError {
        let (line, column) = match span {
            Some(r) => {
                let before = &self.text[..r.start.min(self.text.len())];
                let line = before.matches('\n').count() + 1;
                let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
                (Some(line), Some(column))
            }
            None => (None, None),
        };
        ConfigError {
            field: field.to_string(),
            message: message.into(),
            line,
            column,
        }
    }
}

/// Parses and validates a configuration file.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let loc = Locator { text };
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| loc.at(e.span(), "", e.message().trim()))?;

    let mesh_span = raw.mesh.span();
    let m = raw.mesh.into_inner();
    let mesh = MeshDims::new(m.cols, m.rows).map_err(|e| {
        let msg = match e {
            TopologyError::MeshTooLarge { .. } => format!("mesh exceeds {MAX_NODES} nodes"),
            other => other.to_string(),
        };
        loc.at(Some(mesh_span.clone()), "mesh", msg)
    })?;
    let mut cfg = SimConfig::new(mesh);
    cfg.seed = raw.seed;
    cfg.run_until = SimTime(raw.run_until_ps);

    if let Some(r) = raw.router {
        let span = r.span();
        let r = r.into_inner();
        let d = RouterConfig::default();
        cfg.router = RouterConfig {
            fifo_depth: r.fifo_depth.unwrap_or(d.fifo_depth),
            channel_delay: r.channel_delay_ps.unwrap_or(d.channel_delay),
            drop_policy: match r.drop_policy {
                None => d.drop_policy,
                Some(RawPolicy::DropOnFull) => DropPolicy::DropOnFull,
                Some(RawPolicy::Backpressure) => DropPolicy::Backpressure,
            },
        };
        cfg.router
            .validate()
            .map_err(|e| loc.at(Some(span), "router", e.to_string()))?;
    }
    if let Some(f) = raw.flow_control {
        let d = FlowControlConfig::default();
        cfg.flow_control = FlowControlConfig {
            timeout: f.timeout_ps.unwrap_or(d.timeout),
            max_retries: f.max_retries.unwrap_or(d.max_retries),
        };
        if cfg.flow_control.timeout == 0 {
            return Err(loc.at(None, "flow_control.timeout_ps", "must be positive"));
        }
    }

    let mut listed = vec![false; mesh.node_count()];
    let mut workloads = Vec::new();
    for n in raw.nodes {
        let span = n.span();
        let n = n.into_inner();
        if n.index >= mesh.node_count() {
            return Err(loc.at(
                Some(span),
                "node.index",
                format!("node {} outside a {}-node mesh", n.index, mesh.node_count()),
            ));
        }
        if std::mem::replace(&mut listed[n.index], true) {
            return Err(loc.at(
                Some(span),
                "node.index",
                format!("node {} listed twice", n.index),
            ));
        }
        let period = n.period_ps.unwrap_or(DEFAULT_PERIOD_PS);
        let phase = n.phase_ps.unwrap_or(0);
        if period == 0 || phase >= period {
            return Err(loc.at(
                Some(span),
                "node.phase_ps",
                "need period_ps > 0 and phase_ps < period_ps",
            ));
        }
        let node = &mut cfg.nodes[n.index];
        node.role = n.role;
        node.period_ps = period;
        node.phase_ps = phase;
        node.wait_states = n.wait_states.unwrap_or(0);
        if let Some(w) = n.workload {
            if n.role != NodeRole::Master {
                return Err(loc.at(
                    Some(w.span()),
                    "node.workload",
                    "only masters run workloads",
                ));
            }
            workloads.push((n.index, w));
        }
    }

    for l in raw.lut {
        let span = l.span();
        let l = l.into_inner();
        if l.prefix as usize >= 16 {
            return Err(loc.at(Some(span), "lut.prefix", "prefix must fit in four bits"));
        }
        if cfg.lut.iter().any(|(p, _)| *p == l.prefix) {
            return Err(loc.at(
                Some(span),
                "lut.prefix",
                format!("prefix {} mapped twice", l.prefix),
            ));
        }
        if cfg.nodes.get(l.node).map(|n| n.role) != Some(NodeRole::Slave) {
            return Err(loc.at(Some(span), "lut.node", "lut target not a slave"));
        }
        cfg.lut.push((l.prefix, l.node));
    }

    for (index, w) in workloads {
        let span = w.span();
        let (workload, inherits) = match w.into_inner() {
            RawWorkload::Scripted { ops } => {
                let ops: Vec<WbOp> = ops
                    .into_iter()
                    .map(|o| match o.kind {
                        RawOpKind::Read => WbOp::read(o.adr),
                        RawOpKind::Write => WbOp::write(o.adr, o.data, o.sel),
                    })
                    .collect();
                for op in &ops {
                    if op.sel > 0xF {
                        return Err(loc.at(
                            Some(span.clone()),
                            "workload.ops.sel",
                            "sel is four bits",
                        ));
                    }
                    if !cfg.lut.iter().any(|(p, _)| *p == op.prefix()) {
                        return Err(loc.at(
                            Some(span.clone()),
                            "workload.ops.adr",
                            format!("address {:#010x} has no lut entry", op.adr),
                        ));
                    }
                }
                (MasterWorkload::scripted(ops), false)
            }
            RawWorkload::Random {
                count,
                seed,
                slaves,
            } => {
                let slaves = slaves.unwrap_or_else(|| {
                    let mut targets: Vec<usize> = cfg.lut.iter().map(|&(_, n)| n).collect();
                    targets.sort_unstable();
                    targets.dedup();
                    targets
                });
                if slaves.is_empty() {
                    return Err(loc.at(Some(span), "workload.slaves", "no slave to target"));
                }
                if let Some(s) = slaves.iter().find(|s| cfg.prefix_of(**s).is_none()) {
                    return Err(loc.at(
                        Some(span),
                        "workload.slaves",
                        format!("node {s} is not a lut target"),
                    ));
                }
                let mode = WorkloadMode::RandomUniform {
                    count,
                    seed: seed.unwrap_or(cfg.seed),
                    slaves,
                };
                (
                    MasterWorkload {
                        ops: Vec::new(),
                        mode,
                    },
                    seed.is_none(),
                )
            }
        };
        cfg.nodes[index].workload = workload;
        cfg.nodes[index].inherits_seed = inherits;
    }
    Ok(cfg)
}
