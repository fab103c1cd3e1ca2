//! Engine runs on a two-link chain against hand-computed values.
//!
//! Both links are 100 m, one lane, v = 25 m/s, dt = 2 s: two 50 m cells
//! each, C = 0.5 veh/s * 2 s = 1 veh per step, N_jam = 0.125 * 50 = 6.25.

use otmd_core::engine::{NextLink, StateRow, SubnetworkEngine};
use otmd_core::scenario::{
    DemandPiece, FdParams, LaneRange, Link, RoadConnection, Routing, Scenario, ScenarioParts, SimParams, VehicleType,
};
use otmd_core::{ConnectionId, LinkId, NodeId, VehicleTypeId};

const A: LinkId = LinkId(1);
const B: LinkId = LinkId(2);

fn chain(demand: Vec<DemandPiece>) -> Scenario {
    let fd = FdParams {
        capacity: 0.5,
        free_flow_speed: 25.0,
        congestion_wave_speed: 6.25,
        jam_density: 0.125,
    };
    let link = |id, from, to, is_source| Link {
        id,
        start_node: NodeId(from),
        end_node: NodeId(to),
        length: 100.0,
        lanes: 1,
        fd,
        is_source,
    };
    Scenario::from_parts(ScenarioParts {
        nodes: vec![NodeId(0), NodeId(1), NodeId(2)],
        links: vec![link(A, 0, 1, true), link(B, 1, 2, false)],
        connections: vec![RoadConnection {
            id: ConnectionId(0),
            in_link: A,
            out_link: B,
            in_lanes: LaneRange::full(1),
            out_lanes: LaneRange::full(1),
        }],
        vehicle_types: vec![VehicleType {
            id: VehicleTypeId(0),
            routing: Routing::Deterministic(vec![A, B]),
        }],
        splits: vec![],
        demands: demand.into_iter().map(|d| (A, VehicleTypeId(0), d)).collect(),
        sim: SimParams {
            dt: 2.0,
            steps: 100,
            lane_change_rate: 0.5,
        },
    })
    .unwrap()
}

fn cells(rows: &[StateRow]) -> Vec<(LinkId, u32, NextLink, f64)> {
    rows.iter().map(|r| (r.link, r.cell, r.next, r.vehicles)).collect()
}

#[test]
fn empty_network_stays_empty() {
    let mut e = SubnetworkEngine::for_scenario(&chain(vec![])).unwrap();
    for _ in 0..20 {
        let t = e.step_isolated().unwrap();
        assert_eq!((t.entered, t.exited, t.in_network, t.queued), (0.0, 0.0, 0.0, 0.0));
    }
    assert!(e.dump().is_empty());
}

#[test]
fn pulse_crosses_one_cell_per_step() {
    let s = chain(vec![
        DemandPiece { start: 0.0, rate: 0.25 },
        DemandPiece { start: 2.0, rate: 0.0 },
    ]);
    let mut e = SubnetworkEngine::for_scenario(&s).unwrap();
    let expected = [
        vec![(A, 0, NextLink::Link(B), 0.5)],
        vec![(A, 1, NextLink::Link(B), 0.5)],
        vec![(B, 0, NextLink::Exit, 0.5)],
        vec![(B, 1, NextLink::Exit, 0.5)],
        vec![],
    ];
    for (k, want) in expected.iter().enumerate() {
        let t = e.step_isolated().unwrap();
        assert_eq!(&cells(&e.dump()), want, "after step {}", k + 1);
        assert_eq!(t.exited, if k == 4 { 0.5 } else { 0.0 });
    }
}

#[test]
fn oversaturated_chain_discharges_capacity() {
    // 1 veh/s offered, 1 veh per step served: the queue gains 1 veh per step
    let s = chain(vec![DemandPiece { start: 0.0, rate: 1.0 }]);
    let mut e = SubnetworkEngine::for_scenario(&s).unwrap();
    let tallies: Vec<_> = (0..40).map(|_| e.step_isolated().unwrap()).collect();
    for w in tallies[10..].windows(2) {
        assert_eq!(w[1].exited, 1.0);
        assert_eq!(w[1].entered, 1.0);
        assert!((w[1].queued - w[0].queued - 1.0).abs() < 1e-12);
        assert_eq!(w[1].in_network, w[0].in_network);
    }
    // free-flow state at capacity: every cell holds exactly C
    for (_, _, _, v) in cells(&e.dump()) {
        assert_eq!(v, 1.0);
    }
}
