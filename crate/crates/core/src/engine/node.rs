//! Node model: proportional merge against downstream supplies.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::commodity::CommodityMap;
use crate::ids::{ConnectionId, LinkId};

/// Demand on one road connection, by upstream lane group.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionDemand {
    pub connection: ConnectionId,
    pub out_link: LinkId,
    /// `(upstream lane group, demand)`, ascending group.
    pub per_group: Vec<(u32, CommodityMap)>,
    /// `(downstream lane group, share of the connection's flow)`.
    pub targets: Vec<(u32, f64)>,
}

impl ConnectionDemand {
    pub fn total(&self) -> f64 {
        self.per_group.iter().fold(0.0, |acc, (_, m)| acc + m.total())
    }
}

/// Resolved flow on one road connection, by upstream lane group.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxPacket {
    pub connection: ConnectionId,
    pub out_link: LinkId,
    pub per_group: Vec<(u32, CommodityMap)>,
    pub targets: Vec<(u32, f64)>,
}

impl FluxPacket {
    pub fn total(&self) -> f64 {
        self.per_group.iter().fold(0.0, |acc, (_, m)| acc + m.total())
    }
}

/// First-cell supply per downstream `(link, lane group)`.
pub type SupplyTable = BTreeMap<(LinkId, u32), f64>;

/// Resolves connection demands into flux packets.
///
/// Demand is loaded onto downstream lane groups by each connection's target
/// shares. A group whose load exceeds its supply admits the fraction
/// `supply / load`; each connection is scaled by the smallest fraction among
/// its target groups, so no group receives more than its supply. With a
/// single lane group downstream this is the plain proportional merge: all
/// demand passes when it fits, otherwise every connection is scaled by
/// `supply / total demand`. Connections are processed in ascending id order.
pub fn resolve_node_flows(demands: &[ConnectionDemand], supplies: &SupplyTable) -> Vec<FluxPacket> {
    let mut order: Vec<&ConnectionDemand> = demands.iter().collect();
    order.sort_by_key(|d| d.connection);

    let mut load: BTreeMap<(LinkId, u32), f64> = BTreeMap::new();
    for d in &order {
        let total = d.total();
        for (g, share) in &d.targets {
            *load.entry((d.out_link, *g)).or_insert(0.0) += total * share;
        }
    }
    let admitted = |key: &(LinkId, u32)| -> f64 {
        let l = load.get(key).copied().unwrap_or(0.0);
        let s = supplies.get(key).copied().unwrap_or(0.0);
        if l <= s {
            1.0
        } else {
            s / l
        }
    };

    order
        .into_iter()
        .map(|d| {
            let factor = d
                .targets
                .iter()
                .map(|(g, _)| admitted(&(d.out_link, *g)))
                .fold(if d.targets.is_empty() { 0.0 } else { 1.0 }, f64::min);
            FluxPacket {
                connection: d.connection,
                out_link: d.out_link,
                per_group: d
                    .per_group
                    .iter()
                    .map(|(g, m)| (*g, m.scaled(factor)))
                    .filter(|(_, m)| !m.is_empty())
                    .collect(),
                targets: d.targets.clone(),
            }
        })
        .collect()
}
