use alloc::vec::Vec;

use super::{LaneRange, Link, RoadConnection, ScenarioError};
use crate::ids::{ConnectionId, LinkId};

/// Adjacent lanes of a link that reach the same set of road connections.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneGroup {
    /// Position within the link, counted from the lowest lane.
    pub index: u32,
    pub link: LinkId,
    pub lanes: LaneRange,
    /// Outgoing road connections reachable from every lane of the group, ascending.
    pub outgoing: Vec<ConnectionId>,
    /// `(downstream link, connection)` pairs served by this group, ascending by
    /// link. When several connections lead to the same link the lowest id wins.
    pub routes: Vec<(LinkId, ConnectionId)>,
}

impl LaneGroup {
    /// Connection used by vehicles of this group heading for `next`.
    pub fn route(&self, next: LinkId) -> Option<ConnectionId> {
        self.routes
            .binary_search_by_key(&next, |(l, _)| *l)
            .ok()
            .map(|i| self.routes[i].1)
    }

    pub fn serves(&self, next: LinkId) -> bool {
        self.route(next).is_some()
    }
}

/// Groups the lanes of `link` by their outgoing road connection sets.
///
/// Lanes are scanned from lane 1 upward and consecutive lanes with identical
/// sets form one group, so groups come out ordered by lowest lane. A link
/// without outgoing connections yields a single group covering every lane.
pub fn build_lane_groups(link: &Link, outgoing: &[&RoadConnection]) -> Vec<LaneGroup> {
    let mut sorted: Vec<&RoadConnection> = outgoing.to_vec();
    sorted.sort_by_key(|c| c.id);
    let lane_set = |lane: u32| -> Vec<ConnectionId> {
        sorted
            .iter()
            .filter(|c| c.in_lanes.contains(lane))
            .map(|c| c.id)
            .collect()
    };

    let mut groups: Vec<LaneGroup> = Vec::new();
    let mut current = lane_set(1);
    let mut first = 1;
    for lane in 2..=link.lanes + 1 {
        let next = if lane <= link.lanes { Some(lane_set(lane)) } else { None };
        if next.as_ref() != Some(&current) {
            let outgoing = core::mem::take(&mut current);
            let mut routes: Vec<(LinkId, ConnectionId)> = Vec::new();
            for c in sorted.iter().filter(|c| outgoing.contains(&c.id)) {
                if !routes.iter().any(|(l, _)| *l == c.out_link) {
                    routes.push((c.out_link, c.id));
                }
            }
            routes.sort();
            groups.push(LaneGroup {
                index: groups.len() as u32,
                link: link.id,
                lanes: LaneRange::new(first, lane - 1),
                outgoing,
                routes,
            });
            first = lane;
            if let Some(n) = next {
                current = n;
            }
        }
    }
    groups
}

/// Number of cells and cell length (m) for a link.
///
/// `cell_count = max(1, round(length / (free_flow_speed * dt)))`; a link
/// shorter than half a free-flow step is rejected.
pub fn discretize(link: &Link, dt: f64) -> Result<(u32, f64), ScenarioError> {
    let step_distance = link.fd.free_flow_speed * dt;
    let ratio = link.length / step_distance;
    if !(ratio >= 0.5) {
        return Err(ScenarioError::CflViolation {
            link: link.id,
            length: link.length,
            step_distance,
        });
    }
    // ratio >= 0.5 so truncation of ratio + 0.5 rounds half away from zero
    let count = ((ratio + 0.5) as u32).max(1);
    Ok((count, link.length / count as f64))
}

/// Lane groups and cell discretization of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkLayout {
    pub link: LinkId,
    pub groups: Vec<LaneGroup>,
    pub successors: Vec<LinkId>,
    pub cell_count: u32,
    pub cell_length: f64,
}

impl LinkLayout {
    pub fn new(link: &Link, outgoing: &[&RoadConnection], dt: f64) -> Result<Self, ScenarioError> {
        let (cell_count, cell_length) = discretize(link, dt)?;
        let mut successors: Vec<LinkId> = outgoing.iter().map(|c| c.out_link).collect();
        successors.sort();
        successors.dedup();
        Ok(Self {
            link: link.id,
            groups: build_lane_groups(link, outgoing),
            successors,
            cell_count,
            cell_length,
        })
    }

    pub fn is_sink(&self) -> bool {
        self.successors.is_empty()
    }

    pub fn is_successor(&self, next: LinkId) -> bool {
        self.successors.binary_search(&next).is_ok()
    }

    /// Lane groups receiving flow from a connection entering this link, with
    /// the share of the connection's flow each one gets (overlapping lanes
    /// over the connection's lane count).
    pub fn targets(&self, incoming: &RoadConnection) -> Vec<(u32, f64)> {
        let total = incoming.out_lanes.len() as f64;
        self.groups
            .iter()
            .filter_map(|g| {
                let shared = g.lanes.overlap(&incoming.out_lanes);
                (shared > 0).then(|| (g.index, shared as f64 / total))
            })
            .collect()
    }
}
