//! Macroscopic cell-transmission update.
//!
//! One step is: lane changes and demand/supply, node model, next-link
//! assignment of entering flow, and the conservation update. The
//! [`SubnetworkEngine`] splits a step into [`SubnetworkEngine::phase_a`]
//! (everything up to the node model) and [`SubnetworkEngine::phase_b`]
//! (state update), so that boundary flows can be exchanged in between.

mod cell;
mod commodity;
mod lane_change;
mod node;
mod record;
mod routing;
mod subnet;
mod update;

pub use cell::{compute_demand, compute_supply, CellGeometry};
pub use commodity::{Commodity, CommodityMap, NextLink};
pub use lane_change::apply_lane_changes;
pub use node::{resolve_node_flows, ConnectionDemand, FluxPacket, SupplyTable};
pub use record::{FlowRecord, LaneGroupRef, Slot};
pub use routing::{assign_downstream, compute_connection_demands, RoutingContext};
pub use subnet::{StateRow, StepTally, SubnetworkEngine};
pub use update::{update_states, LinkBalance, LinkFlows, CONSERVATION_TOLERANCE, NEGATIVE_TOLERANCE};

use alloc::vec::Vec;

use crate::ids::{ConnectionId, LinkId, NodeId, VehicleTypeId};
use crate::scenario::ScenarioError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("link {link}: commodity {commodity} has no route out of the link")]
    Routing { link: LinkId, commodity: Commodity },
    #[error("unknown vehicle type {0}")]
    UnknownVehicleType(VehicleTypeId),
    #[error("vehicle type {vehicle_type} entered link {link}, which is not on its path")]
    OffPath { vehicle_type: VehicleTypeId, link: LinkId },
    #[error("no split row for vehicle type {vehicle_type} on link {link} at node {node}")]
    MissingSplit {
        node: NodeId,
        link: LinkId,
        vehicle_type: VehicleTypeId,
    },
    #[error("link {link} group {group} cell {cell}: commodity {commodity} went negative ({value})")]
    NegativeState {
        link: LinkId,
        group: u32,
        cell: u32,
        commodity: Commodity,
        value: f64,
    },
    #[error("link {link}: vehicle conservation violated by {imbalance}")]
    Conservation { link: LinkId, imbalance: f64 },
    #[error("no boundary flows received from subnetwork {peer}")]
    MissingNeighborPacket { peer: u32 },
    #[error("flow record on connection {connection} does not belong to this subnetwork")]
    ForeignRecord { connection: ConnectionId },
    #[error("phase b called without a preceding phase a")]
    PhaseOrder,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Cells of one lane group, upstream to downstream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LaneGroupState {
    pub cells: Vec<CommodityMap>,
}

impl LaneGroupState {
    pub fn empty(cells: usize) -> Self {
        Self {
            cells: alloc::vec![CommodityMap::new(); cells],
        }
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().fold(0.0, |acc, c| acc + c.total())
    }
}
