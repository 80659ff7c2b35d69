// SPDX-License-Identifier: Apache-2.0

mod common;

use wbnoc::adapter::NaFsmState;
use wbnoc::config::{NodeConfig, SimConfig};
use wbnoc::stats::Outcome;
use wbnoc::wishbone::{MasterWorkload, WorkloadMode};
use wbnoc::{
    run_scenario, Direction, DropPolicy, ExitStatus, LinkId, MeshDims, RunOptions, SimError,
    SimTime, Simulation, TraceKind, WbOp,
};

use common::retained;

fn line(ops: Vec<WbOp>) -> SimConfig {
    let mut cfg = SimConfig::new(MeshDims::new(3, 1).unwrap());
    cfg.nodes[0] = NodeConfig::master(ops);
    cfg.nodes[2] = NodeConfig::slave(1);
    cfg.lut = vec![(2, 2)];
    cfg
}

#[test]
fn stalled_link_freezes_transmitter_and_exhausts_retries() {
    let mut cfg = line(vec![WbOp::write(0x2000_0000, 7, 0xF)]);
    cfg.flow_control.timeout = 2_000_000;
    cfg.flow_control.max_retries = 2;
    cfg.run_until = SimTime(40_000_000);
    let opts = RunOptions {
        retain_trace: true,
        stalled_links: vec![LinkId::Out(0, Direction::East)],
        ..Default::default()
    };
    let mut sim = Simulation::new(&cfg, opts).unwrap();
    sim.run_until(SimTime(1_000_000)).unwrap();
    // The first packet sits in router 0; the adapter itself already finished.
    assert_eq!(sim.master_adapter(0).unwrap().tx_state(), NaFsmState::Wait);
    assert!(!sim.router(0).fifo(Direction::East).is_empty());

    let out = sim.run().unwrap();
    let retransmits = out
        .trace
        .records()
        .iter()
        .filter(|r| r.kind == TraceKind::Retransmit && r.component == "n0.core")
        .count();
    assert!(retransmits >= 2, "{retransmits} retransmit records");
    assert_eq!(out.report.retransmits, 2);
    assert_eq!(out.report.records[0].outcome, Outcome::Failed);
    assert_eq!(out.report.packets.delivered, 0);
}

#[test]
fn stalled_injection_link_holds_the_transmitter_in_req() {
    let cfg = line(vec![WbOp::write(0x2000_0000, 7, 0xF)]);
    let opts = RunOptions {
        stalled_links: vec![LinkId::Inject(0)],
        ..Default::default()
    };
    let mut sim = Simulation::new(&cfg, opts).unwrap();
    sim.run_until(SimTime(600_000)).unwrap();
    assert_eq!(sim.master_adapter(0).unwrap().tx_state(), NaFsmState::Req);
    sim.run_until(SimTime(900_000)).unwrap();
    assert_eq!(sim.master_adapter(0).unwrap().tx_state(), NaFsmState::Req);
}

#[test]
fn unmapped_prefix_fails_without_touching_the_network() {
    let cfg = line(vec![
        WbOp::write(0x7000_0000, 1, 0xF),
        WbOp::write(0x2000_0004, 2, 0xF),
    ]);
    let (out, status) = run_scenario(&cfg, RunOptions::default()).unwrap();
    let r = &out.report.records;
    assert_eq!(r[0].outcome, Outcome::Failed);
    assert_eq!(r[1].outcome, Outcome::Completed);
    // Request and response of the mapped write only.
    assert_eq!(out.report.packets.injected, 2);
    assert_eq!(r[0].hops, 0);
    assert!(matches!(status, ExitStatus::RunFailed { failed: 1, .. }));
    assert_eq!(status.code(), 2);
}

#[test]
fn random_workload_without_reachable_slaves_is_rejected() {
    let mut cfg = line(Vec::new());
    cfg.nodes[0].workload = MasterWorkload {
        ops: Vec::new(),
        mode: WorkloadMode::RandomUniform {
            count: 2,
            seed: 0,
            slaves: vec![1],
        },
    };
    assert!(matches!(
        Simulation::new(&cfg, RunOptions::default()),
        Err(SimError::Setup(_))
    ));
}

#[test]
fn byte_lanes_merge_in_slave_memory() {
    let cfg = line(vec![
        WbOp::write(0x2000_0010, 0xAABB_CCDD, 0xF),
        WbOp::write(0x2000_0010, 0x1122_3344, 0b0101),
        WbOp::read(0x2000_0010),
    ]);
    let (out, status) = run_scenario(&cfg, RunOptions::default()).unwrap();
    assert_eq!(status, ExitStatus::Ok);
    assert_eq!(out.report.records[2].data, 0xAA22_CC44);
}

#[test]
fn idle_mesh_finishes_immediately() {
    let cfg = SimConfig::new(MeshDims::new(2, 2).unwrap());
    let (out, status) = run_scenario(&cfg, retained()).unwrap();
    assert_eq!(status, ExitStatus::Ok);
    assert!(out.drained);
    assert!(out.report.records.is_empty());
}

#[test]
fn time_limit_leaves_work_unfinished() {
    let mut cfg = line(
        (0..20)
            .map(|i| WbOp::write(0x2000_0000 | (i << 2), i, 0xF))
            .collect(),
    );
    cfg.run_until = SimTime(1_500_000);
    let (out, status) = run_scenario(&cfg, RunOptions::default()).unwrap();
    assert!(!out.drained);
    match status {
        ExitStatus::RunFailed { unfinished, .. } => assert!(unfinished > 0),
        other => panic!("expected unfinished work, got {other}"),
    }
}

#[test]
fn dropped_request_is_recovered_by_retransmission() {
    // Three masters converge on one slave with single-packet buffers.
    let mut cfg = SimConfig::new(MeshDims::new(2, 2).unwrap());
    for m in 0..3 {
        cfg.nodes[m] = NodeConfig::master(
            (0..10)
                .flat_map(|i| {
                    let adr = 0x3000_0000 | ((m as u32) << 12) | (i << 2);
                    [WbOp::write(adr, i * 3 + m as u32, 0xF), WbOp::read(adr)]
                })
                .collect(),
        );
    }
    cfg.nodes[3] = NodeConfig::slave(0);
    cfg.lut = vec![(3, 3)];
    cfg.router.drop_policy = DropPolicy::DropOnFull;
    cfg.router.fifo_depth = 5;
    cfg.flow_control.timeout = 5_000_000;
    let (out, status) = run_scenario(&cfg, retained()).unwrap();
    assert!(out.report.drops >= 1);
    assert_eq!(out.report.retransmits, out.report.drops);
    assert_eq!(status, ExitStatus::Ok);
    common::check_coherence(&out.report).unwrap();
}
