//! Network and scenario data model.
//!
//! A [`Scenario`] is built from flat [`ScenarioParts`] and is fully validated
//! on construction: referential integrity, fundamental-diagram shape, lane
//! ranges, routing, split distributions, demand placement and the time-step
//! condition. Once built it is immutable.

mod grid;
mod lanes;

pub use grid::{generate_grid, grid_counts, GridCounts, GridSpec};
pub use lanes::{build_lane_groups, discretize, LaneGroup, LinkLayout};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::ids::{ConnectionId, LinkId, NodeId, VehicleTypeId};

/// Tolerance on the sum of a split distribution.
pub const SPLIT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u32 },
    #[error("{owner} references missing {kind} {id}")]
    Dangling {
        kind: &'static str,
        id: u32,
        owner: String,
    },
    #[error("{0}")]
    Invariant(String),
    #[error("link {link}: length {length} m is shorter than half a free-flow step ({step_distance} m)")]
    CflViolation {
        link: LinkId,
        length: f64,
        step_distance: f64,
    },
    #[error("grid dimensions must be at least 1x1 (got {rows}x{cols})")]
    ZeroDimension { rows: u32, cols: u32 },
}

fn invariant(msg: String) -> ScenarioError {
    ScenarioError::Invariant(msg)
}

/// Triangular fundamental diagram, per lane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdParams {
    /// veh/s per lane
    pub capacity: f64,
    /// m/s
    pub free_flow_speed: f64,
    /// m/s
    pub congestion_wave_speed: f64,
    /// veh/m per lane
    pub jam_density: f64,
}

impl FdParams {
    /// Congestion-wave to free-flow speed ratio `w/v`.
    pub fn wave_ratio(&self) -> f64 {
        self.congestion_wave_speed / self.free_flow_speed
    }

    pub fn check(&self) -> Result<(), String> {
        let all = [
            self.capacity,
            self.free_flow_speed,
            self.congestion_wave_speed,
            self.jam_density,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err("fundamental diagram parameters must be strictly positive".into());
        }
        if self.congestion_wave_speed > self.free_flow_speed {
            return Err("congestion wave speed exceeds free-flow speed".into());
        }
        let critical = self.capacity / self.free_flow_speed + self.capacity / self.congestion_wave_speed;
        if critical > self.jam_density {
            return Err(format!(
                "triangle does not fit under jam density (capacity/v + capacity/w = {critical} > {})",
                self.jam_density
            ));
        }
        Ok(())
    }
}

/// Inclusive, 1-based lane index range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LaneRange {
    pub first: u32,
    pub last: u32,
}

impl LaneRange {
    pub const fn new(first: u32, last: u32) -> Self {
        Self { first, last }
    }

    pub fn full(lanes: u32) -> Self {
        Self::new(1, lanes)
    }

    pub fn len(&self) -> u32 {
        self.last + 1 - self.first
    }

    pub fn is_empty(&self) -> bool {
        self.last < self.first
    }

    pub fn contains(&self, lane: u32) -> bool {
        self.first <= lane && lane <= self.last
    }

    /// Number of lanes shared with `other`.
    pub fn overlap(&self, other: &LaneRange) -> u32 {
        let lo = self.first.max(other.first);
        let hi = self.last.min(other.last);
        if hi >= lo {
            hi + 1 - lo
        } else {
            0
        }
    }

    fn within(&self, lanes: u32) -> bool {
        self.first >= 1 && self.first <= self.last && self.last <= lanes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub incoming: Vec<LinkId>,
    pub outgoing: Vec<LinkId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: LinkId,
    pub start_node: NodeId,
    pub end_node: NodeId,
    /// m
    pub length: f64,
    pub lanes: u32,
    pub fd: FdParams,
    /// Receives external demand.
    pub is_source: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadConnection {
    pub id: ConnectionId,
    pub in_link: LinkId,
    pub out_link: LinkId,
    pub in_lanes: LaneRange,
    pub out_lanes: LaneRange,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Routing {
    /// Fixed sequence of links from origin to destination.
    Deterministic(Vec<LinkId>),
    /// Turning decided at link entry from the split matrix.
    Probabilistic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleType {
    pub id: VehicleTypeId,
    pub routing: Routing,
}

impl VehicleType {
    pub fn is_probabilistic(&self) -> bool {
        matches!(self.routing, Routing::Probabilistic)
    }

    /// Link following `link` on a deterministic path; `None` if `link` is
    /// not on the path, `Some(None)` if it is the last link.
    pub fn path_successor(&self, link: LinkId) -> Option<Option<LinkId>> {
        match &self.routing {
            Routing::Deterministic(path) => {
                let pos = path.iter().position(|l| *l == link)?;
                Some(path.get(pos + 1).copied())
            }
            Routing::Probabilistic => None,
        }
    }

    /// Whether a vehicle of this type can travel `from` then `to`.
    pub fn may_turn(&self, from: LinkId, to: LinkId) -> bool {
        match &self.routing {
            Routing::Deterministic(path) => path.windows(2).any(|w| w[0] == from && w[1] == to),
            Routing::Probabilistic => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SplitKey {
    pub node: NodeId,
    pub in_link: LinkId,
    pub vehicle_type: VehicleTypeId,
}

/// One piece of a piecewise-constant turning distribution, valid from `start` (s).
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPiece {
    pub start: f64,
    pub probabilities: Vec<(LinkId, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitMatrix {
    rows: BTreeMap<SplitKey, Vec<SplitPiece>>,
}

impl SplitMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a piece; pieces of a row are kept sorted by start time.
    pub fn insert(&mut self, key: SplitKey, piece: SplitPiece) {
        let row = self.rows.entry(key).or_default();
        let pos = row.partition_point(|p| p.start <= piece.start);
        row.insert(pos, piece);
    }

    /// Distribution in effect at time `t` (s).
    pub fn at(&self, key: &SplitKey, t: f64) -> Option<&[(LinkId, f64)]> {
        let row = self.rows.get(key)?;
        piece_at(row, t, |p| p.start).map(|p| p.probabilities.as_slice())
    }

    pub fn rows(&self) -> impl Iterator<Item = (&SplitKey, &Vec<SplitPiece>)> {
        self.rows.iter()
    }

    pub fn row(&self, key: &SplitKey) -> Option<&Vec<SplitPiece>> {
        self.rows.get(key)
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Rows satisfying `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&SplitKey) -> bool) -> SplitMatrix {
        SplitMatrix {
            rows: self
                .rows
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    pub fn extend_from(&mut self, other: &SplitMatrix) {
        for (k, v) in &other.rows {
            self.rows.entry(*k).or_insert_with(|| v.clone());
        }
    }
}

fn piece_at<P>(row: &[P], t: f64, start: impl Fn(&P) -> f64) -> Option<&P> {
    let idx = row.partition_point(|p| start(p) <= t);
    if idx == 0 {
        None
    } else {
        row.get(idx - 1)
    }
}

/// Piecewise-constant flow (veh/s) starting at `start` (s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandPiece {
    pub start: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DemandProfile {
    flows: BTreeMap<(LinkId, VehicleTypeId), Vec<DemandPiece>>,
}

impl DemandProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, link: LinkId, vehicle_type: VehicleTypeId, piece: DemandPiece) {
        let row = self.flows.entry((link, vehicle_type)).or_default();
        let pos = row.partition_point(|p| p.start <= piece.start);
        row.insert(pos, piece);
    }

    /// Flow (veh/s) at time `t`; zero before the first breakpoint.
    pub fn rate(&self, link: LinkId, vehicle_type: VehicleTypeId, t: f64) -> f64 {
        self.flows
            .get(&(link, vehicle_type))
            .and_then(|row| piece_at(row, t, |p| p.start))
            .map_or(0.0, |p| p.rate)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(LinkId, VehicleTypeId), &Vec<DemandPiece>)> {
        self.flows.iter()
    }

    /// Vehicle types with a profile on `link`, ascending.
    pub fn types_on(&self, link: LinkId) -> impl Iterator<Item = VehicleTypeId> + '_ {
        self.flows
            .range((link, VehicleTypeId(0))..=(link, VehicleTypeId(u32::MAX)))
            .map(|((_, t), _)| *t)
    }

    pub fn filtered(&self, mut keep: impl FnMut(LinkId) -> bool) -> DemandProfile {
        DemandProfile {
            flows: self
                .flows
                .iter()
                .filter(|((l, _), _)| keep(*l))
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    pub fn extend_from(&mut self, other: &DemandProfile) {
        for (k, v) in &other.flows {
            self.flows.entry(*k).or_insert_with(|| v.clone());
        }
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// Time step (s).
    pub dt: f64,
    /// Duration in steps.
    pub steps: u64,
    /// Fraction of misplaced vehicles moving one lane group per step.
    pub lane_change_rate: f64,
}

impl SimParams {
    pub const DEFAULT_LANE_CHANGE_RATE: f64 = 0.5;
}

/// How strictly to validate deterministic paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validation {
    /// Every path link must exist and consecutive links must be connected.
    Full,
    /// Subnetwork fragment: paths may leave the fragment.
    Fragment,
}

/// Flat, unvalidated scenario contents.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParts {
    pub nodes: Vec<NodeId>,
    pub links: Vec<Link>,
    pub connections: Vec<RoadConnection>,
    pub vehicle_types: Vec<VehicleType>,
    pub splits: Vec<(SplitKey, SplitPiece)>,
    pub demands: Vec<(LinkId, VehicleTypeId, DemandPiece)>,
    pub sim: SimParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    nodes: BTreeMap<NodeId, Node>,
    links: BTreeMap<LinkId, Link>,
    connections: BTreeMap<ConnectionId, RoadConnection>,
    vehicle_types: BTreeMap<VehicleTypeId, VehicleType>,
    splits: SplitMatrix,
    demands: DemandProfile,
    sim: SimParams,
    conn_out: BTreeMap<LinkId, Vec<ConnectionId>>,
    conn_in: BTreeMap<LinkId, Vec<ConnectionId>>,
}

impl Scenario {
    pub fn from_parts(parts: ScenarioParts) -> Result<Self, ScenarioError> {
        Self::from_parts_with(parts, Validation::Full)
    }

    pub fn from_parts_with(parts: ScenarioParts, mode: Validation) -> Result<Self, ScenarioError> {
        let mut nodes = BTreeMap::new();
        for id in parts.nodes {
            if nodes
                .insert(
                    id,
                    Node {
                        id,
                        incoming: Vec::new(),
                        outgoing: Vec::new(),
                    },
                )
                .is_some()
            {
                return Err(ScenarioError::DuplicateId { kind: "node", id: id.0 });
            }
        }

        let mut links = BTreeMap::new();
        for link in parts.links {
            let id = link.id;
            if links.insert(id, link).is_some() {
                return Err(ScenarioError::DuplicateId { kind: "link", id: id.0 });
            }
        }
        for link in links.values() {
            let owner = || format!("link {}", link.id);
            for n in [link.start_node, link.end_node] {
                if !nodes.contains_key(&n) {
                    return Err(ScenarioError::Dangling {
                        kind: "node",
                        id: n.0,
                        owner: owner(),
                    });
                }
            }
            if link.start_node == link.end_node {
                return Err(invariant(format!("link {}: start node equals end node", link.id)));
            }
            if !(link.length.is_finite() && link.length > 0.0) {
                return Err(invariant(format!("link {}: length must be positive", link.id)));
            }
            if link.lanes < 1 {
                return Err(invariant(format!("link {}: lanes must be at least 1", link.id)));
            }
            link.fd
                .check()
                .map_err(|rule| invariant(format!("link {}: {rule}", link.id)))?;
        }
        for link in links.values() {
            nodes.get_mut(&link.start_node).unwrap().outgoing.push(link.id);
            nodes.get_mut(&link.end_node).unwrap().incoming.push(link.id);
        }

        let mut connections = BTreeMap::new();
        let mut conn_out: BTreeMap<LinkId, Vec<ConnectionId>> = BTreeMap::new();
        let mut conn_in: BTreeMap<LinkId, Vec<ConnectionId>> = BTreeMap::new();
        for rc in parts.connections {
            let id = rc.id;
            let owner = || format!("road connection {id}");
            let in_link = links.get(&rc.in_link).ok_or_else(|| ScenarioError::Dangling {
                kind: "link",
                id: rc.in_link.0,
                owner: owner(),
            })?;
            let out_link = links.get(&rc.out_link).ok_or_else(|| ScenarioError::Dangling {
                kind: "link",
                id: rc.out_link.0,
                owner: owner(),
            })?;
            if in_link.end_node != out_link.start_node {
                return Err(invariant(format!(
                    "road connection {id}: link {} does not end where link {} starts",
                    in_link.id, out_link.id
                )));
            }
            if !rc.in_lanes.within(in_link.lanes) || !rc.out_lanes.within(out_link.lanes) {
                return Err(invariant(format!(
                    "road connection {id}: lane range outside link lanes"
                )));
            }
            conn_out.entry(rc.in_link).or_default().push(id);
            conn_in.entry(rc.out_link).or_default().push(id);
            if connections.insert(id, rc).is_some() {
                return Err(ScenarioError::DuplicateId {
                    kind: "road connection",
                    id: id.0,
                });
            }
        }
        for v in conn_out.values_mut().chain(conn_in.values_mut()) {
            v.sort();
        }
        for link in links.values() {
            if link.is_source && conn_in.contains_key(&link.id) {
                return Err(invariant(format!(
                    "link {}: source link has incoming road connections",
                    link.id
                )));
            }
        }

        let mut vehicle_types = BTreeMap::new();
        for vt in parts.vehicle_types {
            let id = vt.id;
            if vehicle_types.insert(id, vt).is_some() {
                return Err(ScenarioError::DuplicateId {
                    kind: "vehicle type",
                    id: id.0,
                });
            }
        }

        let connected = |a: LinkId, b: LinkId| {
            conn_out
                .get(&a)
                .is_some_and(|cs| cs.iter().any(|c| connections[c].out_link == b))
        };

        for vt in vehicle_types.values() {
            let Routing::Deterministic(path) = &vt.routing else {
                continue;
            };
            if path.is_empty() {
                return Err(invariant(format!("vehicle type {}: empty path", vt.id)));
            }
            let distinct: BTreeSet<_> = path.iter().collect();
            if distinct.len() != path.len() {
                return Err(invariant(format!("vehicle type {}: path repeats a link", vt.id)));
            }
            if mode == Validation::Full {
                for l in path {
                    if !links.contains_key(l) {
                        return Err(ScenarioError::Dangling {
                            kind: "link",
                            id: l.0,
                            owner: format!("path of vehicle type {}", vt.id),
                        });
                    }
                }
                for w in path.windows(2) {
                    if !connected(w[0], w[1]) {
                        return Err(invariant(format!(
                            "vehicle type {}: path is not connected between links {} and {}",
                            vt.id, w[0], w[1]
                        )));
                    }
                }
                let last = path[path.len() - 1];
                if conn_out.contains_key(&last) {
                    return Err(invariant(format!(
                        "vehicle type {}: path must end on a sink link (link {last} has successors)",
                        vt.id
                    )));
                }
            }
        }

        let mut splits = SplitMatrix::new();
        let mut seen_split = BTreeSet::new();
        for (key, piece) in parts.splits {
            let label = || {
                format!(
                    "split row (node {}, link {}, type {}, t={})",
                    key.node, key.in_link, key.vehicle_type, piece.start
                )
            };
            if !nodes.contains_key(&key.node) {
                return Err(ScenarioError::Dangling {
                    kind: "node",
                    id: key.node.0,
                    owner: label(),
                });
            }
            let in_link = links.get(&key.in_link).ok_or_else(|| ScenarioError::Dangling {
                kind: "link",
                id: key.in_link.0,
                owner: label(),
            })?;
            if in_link.end_node != key.node {
                return Err(invariant(format!("{}: link does not end at the node", label())));
            }
            let vt = vehicle_types
                .get(&key.vehicle_type)
                .ok_or_else(|| ScenarioError::Dangling {
                    kind: "vehicle type",
                    id: key.vehicle_type.0,
                    owner: label(),
                })?;
            if !vt.is_probabilistic() {
                return Err(invariant(format!(
                    "{}: vehicle type is deterministically routed",
                    label()
                )));
            }
            if !(piece.start.is_finite() && piece.start >= 0.0) {
                return Err(invariant(format!("{}: start time must be non-negative", label())));
            }
            if !seen_split.insert((key, piece.start.to_bits())) {
                return Err(invariant(format!("{}: duplicate row", label())));
            }
            let mut sum = 0.0;
            let mut outs = BTreeSet::new();
            for (out, p) in &piece.probabilities {
                if !(p.is_finite() && *p >= 0.0) {
                    return Err(invariant(format!("{}: negative probability", label())));
                }
                if !outs.insert(*out) {
                    return Err(invariant(format!("{}: link {out} listed twice", label())));
                }
                if !links.contains_key(out) {
                    return Err(ScenarioError::Dangling {
                        kind: "link",
                        id: out.0,
                        owner: label(),
                    });
                }
                if !connected(key.in_link, *out) {
                    return Err(invariant(format!(
                        "{}: link {out} not reachable via a road connection",
                        label()
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > SPLIT_SUM_TOLERANCE {
                return Err(invariant(format!("{}: distribution sums to {sum}", label())));
            }
            splits.insert(key, piece);
        }

        let mut demands = DemandProfile::new();
        let mut seen_demand = BTreeSet::new();
        for (link_id, vt_id, piece) in parts.demands {
            let label = || format!("demand (link {link_id}, type {vt_id}, t={})", piece.start);
            let link = links.get(&link_id).ok_or_else(|| ScenarioError::Dangling {
                kind: "link",
                id: link_id.0,
                owner: label(),
            })?;
            let vt = vehicle_types.get(&vt_id).ok_or_else(|| ScenarioError::Dangling {
                kind: "vehicle type",
                id: vt_id.0,
                owner: label(),
            })?;
            if !link.is_source {
                return Err(invariant(format!("{}: link is not a source", label())));
            }
            if !(piece.rate.is_finite() && piece.rate >= 0.0) {
                return Err(invariant(format!("{}: flow must be non-negative", label())));
            }
            if !(piece.start.is_finite() && piece.start >= 0.0) {
                return Err(invariant(format!("{}: start time must be non-negative", label())));
            }
            if let Routing::Deterministic(path) = &vt.routing {
                if path.first() != Some(&link_id) {
                    return Err(invariant(format!(
                        "{}: deterministic path does not start on this link",
                        label()
                    )));
                }
            }
            if !seen_demand.insert((link_id, vt_id, piece.start.to_bits())) {
                return Err(invariant(format!("{}: duplicate entry", label())));
            }
            demands.insert(link_id, vt_id, piece);
        }

        let sim = parts.sim;
        if !(sim.dt.is_finite() && sim.dt > 0.0) {
            return Err(invariant("simulation time step must be positive".into()));
        }
        if !(0.0..=1.0).contains(&sim.lane_change_rate) {
            return Err(invariant("lane change rate must lie in [0, 1]".into()));
        }
        for link in links.values() {
            let step_distance = link.fd.free_flow_speed * sim.dt;
            if step_distance > link.length * (1.0 + 1e-9) {
                return Err(invariant(format!(
                    "link {}: free-flow step distance {step_distance} m exceeds length {} m",
                    link.id, link.length
                )));
            }
        }

        Ok(Scenario {
            nodes,
            links,
            connections,
            vehicle_types,
            splits,
            demands,
            sim,
            conn_out,
            conn_in,
        })
    }

    /// Inverse of [`Scenario::from_parts`], in ascending id order.
    pub fn to_parts(&self) -> ScenarioParts {
        ScenarioParts {
            nodes: self.nodes.keys().copied().collect(),
            links: self.links.values().cloned().collect(),
            connections: self.connections.values().cloned().collect(),
            vehicle_types: self.vehicle_types.values().cloned().collect(),
            splits: self
                .splits
                .rows()
                .flat_map(|(k, pieces)| pieces.iter().map(move |p| (*k, p.clone())))
                .collect(),
            demands: self
                .demands
                .entries()
                .flat_map(|((l, t), pieces)| pieces.iter().map(move |p| (*l, *t, *p)))
                .collect(),
            sim: self.sim,
        }
    }

    pub fn nodes(&self) -> &BTreeMap<NodeId, Node> {
        &self.nodes
    }

    pub fn links(&self) -> &BTreeMap<LinkId, Link> {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> Option<&Link> {
        self.links.get(&id)
    }

    pub fn connections(&self) -> &BTreeMap<ConnectionId, RoadConnection> {
        &self.connections
    }

    pub fn connection(&self, id: ConnectionId) -> Option<&RoadConnection> {
        self.connections.get(&id)
    }

    pub fn vehicle_types(&self) -> &BTreeMap<VehicleTypeId, VehicleType> {
        &self.vehicle_types
    }

    pub fn splits(&self) -> &SplitMatrix {
        &self.splits
    }

    pub fn demands(&self) -> &DemandProfile {
        &self.demands
    }

    pub fn sim(&self) -> &SimParams {
        &self.sim
    }

    /// Replaces the simulation parameters (duration overrides etc.).
    pub fn with_sim(mut self, sim: SimParams) -> Self {
        self.sim = sim;
        self
    }

    /// Road connections leaving `link`, ascending id.
    pub fn outgoing_connections(&self, link: LinkId) -> &[ConnectionId] {
        self.conn_out.get(&link).map_or(&[], |v| v.as_slice())
    }

    /// Road connections entering `link`, ascending id.
    pub fn incoming_connections(&self, link: LinkId) -> &[ConnectionId] {
        self.conn_in.get(&link).map_or(&[], |v| v.as_slice())
    }

    /// A link with no outgoing road connections.
    pub fn is_sink(&self, link: LinkId) -> bool {
        !self.conn_out.contains_key(&link)
    }

    /// Node at which a road connection lives.
    pub fn connection_node(&self, id: ConnectionId) -> Option<NodeId> {
        let rc = self.connections.get(&id)?;
        self.links.get(&rc.in_link).map(|l| l.end_node)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use alloc::vec;

    pub fn fd() -> FdParams {
        FdParams {
            capacity: 0.5,
            free_flow_speed: 15.0,
            congestion_wave_speed: 5.0,
            jam_density: 0.15,
        }
    }

    pub fn link(id: u32, from: u32, to: u32, lanes: u32, source: bool) -> Link {
        Link {
            id: LinkId(id),
            start_node: NodeId(from),
            end_node: NodeId(to),
            length: 150.0,
            lanes,
            fd: fd(),
            is_source: source,
        }
    }

    pub fn conn(id: u32, from: u32, to: u32, in_lanes: (u32, u32), out_lanes: (u32, u32)) -> RoadConnection {
        RoadConnection {
            id: ConnectionId(id),
            in_link: LinkId(from),
            out_link: LinkId(to),
            in_lanes: LaneRange::new(in_lanes.0, in_lanes.1),
            out_lanes: LaneRange::new(out_lanes.0, out_lanes.1),
        }
    }

    pub fn sim() -> SimParams {
        SimParams {
            dt: 2.0,
            steps: 10,
            lane_change_rate: 0.5,
        }
    }

    /// Two sources merging at node 2 into link 3.
    pub fn merge_parts() -> ScenarioParts {
        ScenarioParts {
            nodes: vec![NodeId(0), NodeId(1), NodeId(2), NodeId(3)],
            links: vec![link(1, 0, 2, 1, true), link(2, 1, 2, 1, true), link(3, 2, 3, 1, false)],
            connections: vec![conn(1, 1, 3, (1, 1), (1, 1)), conn(2, 2, 3, (1, 1), (1, 1))],
            vehicle_types: vec![VehicleType {
                id: VehicleTypeId(0),
                routing: Routing::Probabilistic,
            }],
            splits: vec![
                (
                    SplitKey {
                        node: NodeId(2),
                        in_link: LinkId(1),
                        vehicle_type: VehicleTypeId(0),
                    },
                    SplitPiece {
                        start: 0.0,
                        probabilities: vec![(LinkId(3), 1.0)],
                    },
                ),
                (
                    SplitKey {
                        node: NodeId(2),
                        in_link: LinkId(2),
                        vehicle_type: VehicleTypeId(0),
                    },
                    SplitPiece {
                        start: 0.0,
                        probabilities: vec![(LinkId(3), 1.0)],
                    },
                ),
            ],
            demands: vec![
                (LinkId(1), VehicleTypeId(0), DemandPiece { start: 0.0, rate: 0.2 }),
                (LinkId(2), VehicleTypeId(0), DemandPiece { start: 0.0, rate: 0.2 }),
            ],
            sim: sim(),
        }
    }
}
