//! Synthetic tiled grid.
//!
//! One tile is a block of two junctions joined by a street that is split in
//! the middle by a midblock node:
//!
//! ```text
//!        |               |
//!   -- J_L ---- M ---- J_R --
//!        |               |
//! ```
//!
//! Tiles repeat `cols` times horizontally (the right junction of one tile is
//! joined to the left junction of the next) and `rows` times vertically
//! (junctions are joined to the junction below). Every street is two-way.
//! Each open junction side on the grid boundary gets a gate node carrying one
//! source link into the grid and one sink link out of it.
//!
//! Counts for `rows x cols` tiles:
//!
//! * nodes   = 3·rows·cols + 2·rows + 4·cols
//! * links   = 10·rows·cols + 2·rows + 4·cols
//! * sources = 2·rows + 4·cols
//!
//! The link/node ratio tends to 10/3 for large grids.

use alloc::vec::Vec;

use super::{
    DemandPiece, FdParams, LaneRange, Link, RoadConnection, Routing, Scenario, ScenarioError,
    ScenarioParts, SimParams, SplitKey, SplitPiece, VehicleType,
};
use crate::ids::{ConnectionId, LinkId, NodeId, VehicleTypeId};

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub rows: u32,
    pub cols: u32,
    /// Junction-to-junction street length (m); midblock segments are half of it.
    pub block_length: f64,
    pub lanes: u32,
    pub fd: FdParams,
    pub demand_vph_per_lane: f64,
    pub dt: f64,
    pub steps: u64,
    pub lane_change_rate: f64,
}

impl GridSpec {
    pub fn new(rows: u32, cols: u32) -> Self {
        Self {
            rows,
            cols,
            block_length: 300.0,
            lanes: 2,
            fd: FdParams {
                capacity: 0.5,
                free_flow_speed: 15.0,
                congestion_wave_speed: 5.0,
                jam_density: 0.15,
            },
            demand_vph_per_lane: 2000.0,
            dt: 2.0,
            steps: 100,
            lane_change_rate: SimParams::DEFAULT_LANE_CHANGE_RATE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridCounts {
    pub nodes: usize,
    pub links: usize,
    pub sources: usize,
}

pub fn grid_counts(rows: u32, cols: u32) -> GridCounts {
    let (r, c) = (rows as usize, cols as usize);
    GridCounts {
        nodes: 3 * r * c + 2 * r + 4 * c,
        links: 10 * r * c + 2 * r + 4 * c,
        sources: 2 * r + 4 * c,
    }
}

pub fn generate_grid(spec: &GridSpec) -> Result<Scenario, ScenarioError> {
    let (rows, cols) = (spec.rows, spec.cols);
    if rows == 0 || cols == 0 {
        return Err(ScenarioError::ZeroDimension { rows, cols });
    }
    let k_cols = 2 * cols;
    let junction = |r: u32, k: u32| NodeId(r * k_cols + k);
    let mid = |r: u32, c: u32| NodeId(rows * k_cols + r * cols + c);
    let mut next_node = rows * k_cols + rows * cols;
    let mut nodes: Vec<NodeId> = (0..next_node).map(NodeId).collect();

    let mut links: Vec<Link> = Vec::new();
    let mut add_link = |from: NodeId, to: NodeId, length: f64, source: bool| {
        let id = LinkId(links.len() as u32);
        links.push(Link {
            id,
            start_node: from,
            end_node: to,
            length,
            lanes: spec.lanes,
            fd: spec.fd,
            is_source: source,
        });
        id
    };
    let block = spec.block_length;
    let half = block / 2.0;

    for r in 0..rows {
        for c in 0..cols {
            let (jl, m, jr) = (junction(r, 2 * c), mid(r, c), junction(r, 2 * c + 1));
            add_link(jl, m, half, false);
            add_link(m, jl, half, false);
            add_link(m, jr, half, false);
            add_link(jr, m, half, false);
            if c + 1 < cols {
                let next = junction(r, 2 * c + 2);
                add_link(jr, next, block, false);
                add_link(next, jr, block, false);
            }
        }
    }
    for r in 0..rows.saturating_sub(1) {
        for k in 0..k_cols {
            add_link(junction(r, k), junction(r + 1, k), block, false);
            add_link(junction(r + 1, k), junction(r, k), block, false);
        }
    }
    let boundary: Vec<NodeId> = (0..k_cols)
        .map(|k| junction(0, k))
        .chain((0..k_cols).map(|k| junction(rows - 1, k)))
        .chain((0..rows).map(|r| junction(r, 0)))
        .chain((0..rows).map(|r| junction(r, k_cols - 1)))
        .collect();
    let mut sources = Vec::new();
    for j in boundary {
        let gate = NodeId(next_node);
        next_node += 1;
        nodes.push(gate);
        sources.push(add_link(gate, j, block, true));
        add_link(j, gate, block, false);
    }

    // connections and uniform splits at junctions and midblock nodes
    let mut incoming: Vec<Vec<&Link>> = (0..next_node).map(|_| Vec::new()).collect();
    let mut outgoing: Vec<Vec<&Link>> = (0..next_node).map(|_| Vec::new()).collect();
    for l in &links {
        incoming[l.end_node.0 as usize].push(l);
        outgoing[l.start_node.0 as usize].push(l);
    }
    let mut connections = Vec::new();
    let mut splits = Vec::new();
    let vt = VehicleTypeId(0);
    for node in 0..rows * k_cols + rows * cols {
        for inl in &incoming[node as usize] {
            let outs: Vec<&&Link> = outgoing[node as usize]
                .iter()
                .filter(|o| o.end_node != inl.start_node)
                .collect();
            if outs.is_empty() {
                continue;
            }
            let p = 1.0 / outs.len() as f64;
            let mut probabilities = Vec::new();
            for o in outs {
                connections.push(RoadConnection {
                    id: ConnectionId(connections.len() as u32),
                    in_link: inl.id,
                    out_link: o.id,
                    in_lanes: LaneRange::full(inl.lanes),
                    out_lanes: LaneRange::full(o.lanes),
                });
                probabilities.push((o.id, p));
            }
            splits.push((
                SplitKey {
                    node: NodeId(node),
                    in_link: inl.id,
                    vehicle_type: vt,
                },
                SplitPiece {
                    start: 0.0,
                    probabilities,
                },
            ));
        }
    }

    let rate = spec.demand_vph_per_lane * spec.lanes as f64 / 3600.0;
    let demands = sources
        .iter()
        .map(|l| (*l, vt, DemandPiece { start: 0.0, rate }))
        .collect();

    Scenario::from_parts(ScenarioParts {
        nodes,
        links,
        connections,
        vehicle_types: alloc::vec![VehicleType {
            id: vt,
            routing: Routing::Probabilistic,
        }],
        splits,
        demands,
        sim: SimParams {
            dt: spec.dt,
            steps: spec.steps,
            lane_change_rate: spec.lane_change_rate,
        },
    })
}
