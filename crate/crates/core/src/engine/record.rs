use core::fmt;

use super::commodity::Commodity;
use crate::ids::{ConnectionId, LinkId};

/// A lane group, named by its link and its position within the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LaneGroupRef {
    pub link: LinkId,
    pub index: u32,
}

/// One position of a boundary message.
///
/// If `lane_group.link` is the connection's downstream link the slot holds
/// flow entering that group, with `commodity` already carrying the next link
/// after the connection's downstream link. Otherwise it holds flow leaving the
/// upstream group through the connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub connection: ConnectionId,
    pub lane_group: LaneGroupRef,
    pub commodity: Commodity,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "connection {}, lane group {}/{}, vehicle type {}, next link {}",
            self.connection,
            self.lane_group.link,
            self.lane_group.index,
            self.commodity.vehicle_type,
            self.commodity.next
        )
    }
}

/// Vehicles moved on one slot during a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRecord {
    pub slot: Slot,
    pub vehicles: f64,
}
