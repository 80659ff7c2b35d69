// SPDX-License-Identifier: Apache-2.0

//! Deterministic discrete-event model of an asynchronous mesh network-on-chip
//! whose cores attach through WISHBONE network adapters.
//!
//! Each router is a five-port asynchronous switch joined to its neighbours by
//! four-phase handshake channels. Packets are source routed in X-first order.
//! Every core runs in its own clock domain and reaches the network through an
//! adapter whose asynchronous levels are retimed by two-flop synchronizers.
//! End-to-end delivery is guaranteed by timeouts and retransmission in the
//! master cores.

pub mod adapter;
pub mod config;
pub mod kernel;
pub mod packet;
pub mod router;
pub mod scenario;
pub mod sim;
pub mod stats;
pub mod topology;
pub mod wishbone;

pub use config::{parse_config, ConfigError, NodeConfig, NodeRole, SimConfig};
pub use kernel::{
    ClockDomain, DomainId, Scheduler, SimTime, Synchronizer, Trace, TraceKind, TraceRecord,
};
pub use packet::{Flit, FlitKind, Packet, TransactionPayload, TxnKind};
pub use router::{DropPolicy, Router, RouterConfig};
pub use scenario::{run_scenario, ExitStatus};
pub use sim::{simulate, Fault, LinkId, RunOptions, SimError, SimOutput, Simulation};
pub use stats::{RunReport, TxnRecord};
pub use topology::{compute_route, encode_route, Direction, MeshDims, NodeCoord, SourceRoute};
pub use wishbone::{FlowControlConfig, WbOp, WbOpKind, WbSignals};
