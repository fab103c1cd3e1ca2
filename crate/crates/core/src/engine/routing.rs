//! Mapping of last-cell demand onto road connections, and next-link
//! assignment for flow entering a link.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::commodity::{Commodity, CommodityMap, NextLink};
use super::EngineError;
use crate::ids::{ConnectionId, NodeId, VehicleTypeId};
use crate::scenario::{LaneGroup, LinkLayout, Routing, SplitKey, SplitMatrix, VehicleType};

/// Distributes a lane group's last-cell demand over its outgoing road
/// connections.
///
/// Each commodity goes entirely to the connection leading to its next link.
/// Commodities whose next link this group does not serve contribute nothing
/// (they must change lanes first). A next link not reachable from the link at
/// all is a routing-integrity error.
pub fn compute_connection_demands(
    demand: &CommodityMap,
    group: &LaneGroup,
    layout: &LinkLayout,
) -> Result<Vec<(ConnectionId, CommodityMap)>, EngineError> {
    let mut out: Vec<(ConnectionId, CommodityMap)> = Vec::new();
    for (k, v) in demand.iter() {
        let NextLink::Link(next) = k.next else {
            return Err(EngineError::Routing {
                link: layout.link,
                commodity: k,
            });
        };
        match group.route(next) {
            Some(c) => match out.binary_search_by_key(&c, |(id, _)| *id) {
                Ok(i) => out[i].1.add(k, v),
                Err(i) => out.insert(i, (c, CommodityMap::from_pairs([(k, v)]))),
            },
            None if layout.is_successor(next) => {}
            None => {
                return Err(EngineError::Routing {
                    link: layout.link,
                    commodity: k,
                })
            }
        }
    }
    Ok(out)
}

/// What is needed to tag vehicles entering a link with their next link.
#[derive(Debug, Clone)]
pub struct RoutingContext {
    vehicle_types: BTreeMap<VehicleTypeId, VehicleType>,
    splits: SplitMatrix,
}

impl RoutingContext {
    pub fn new(vehicle_types: BTreeMap<VehicleTypeId, VehicleType>, splits: SplitMatrix) -> Self {
        Self {
            vehicle_types,
            splits,
        }
    }

    pub fn vehicle_types(&self) -> &BTreeMap<VehicleTypeId, VehicleType> {
        &self.vehicle_types
    }
}

/// Commodities created by `amount` vehicles of one type entering a link.
///
/// Deterministic types advance along their path; probabilistic types are
/// split over the successors by the turning probabilities at the link's end
/// node in effect at time `t`; anything entering a sink link exits there.
pub fn assign_downstream(
    ctx: &RoutingContext,
    entering: &LinkLayout,
    end_node: NodeId,
    vehicle_type: VehicleTypeId,
    amount: f64,
    t: f64,
    out: &mut Vec<(Commodity, f64)>,
) -> Result<(), EngineError> {
    if amount == 0.0 {
        return Ok(());
    }
    let vt = ctx
        .vehicle_types
        .get(&vehicle_type)
        .ok_or(EngineError::UnknownVehicleType(vehicle_type))?;
    match &vt.routing {
        Routing::Deterministic(_) => {
            let next = vt.path_successor(entering.link).ok_or(EngineError::OffPath {
                vehicle_type,
                link: entering.link,
            })?;
            let next = next.map_or(NextLink::Exit, NextLink::Link);
            out.push((Commodity::new(vehicle_type, next), amount));
        }
        Routing::Probabilistic if entering.is_sink() => {
            out.push((Commodity::new(vehicle_type, NextLink::Exit), amount));
        }
        Routing::Probabilistic => {
            let key = SplitKey {
                node: end_node,
                in_link: entering.link,
                vehicle_type,
            };
            let row = ctx.splits.at(&key, t).ok_or(EngineError::MissingSplit {
                node: end_node,
                link: entering.link,
                vehicle_type,
            })?;
            for (next, p) in row {
                let v = amount * p;
                if v != 0.0 {
                    out.push((Commodity::new(vehicle_type, NextLink::Link(*next)), v));
                }
            }
        }
    }
    Ok(())
}
