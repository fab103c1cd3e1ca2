use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use super::NodePartition;
use crate::ids::{LinkId, NodeId};
use crate::scenario::{
    RoadConnection, Scenario, ScenarioError, ScenarioParts, SplitKey, SplitPiece, Validation,
};

/// The part of the network simulated by one worker.
///
/// The fragment holds the subset's nodes, every link with at least one end
/// in the subset, the road connections and split rows at the subset's nodes,
/// and demand on the fragment's source links. An overlap link is a
/// *relative sink* of the subnetwork holding its start node and a *relative
/// source* of the one holding its end node. Both sides keep a replica of the
/// link's state; the relative-sink side is its owner.
///
/// To compute flow into and out of its overlap links, a subnetwork also
/// carries the road connections at their far ends and the split rows for its
/// relative sinks at their end nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Subnetwork {
    pub index: u32,
    pub n: u32,
    /// Nodes of the subset, ascending.
    pub nodes: Vec<NodeId>,
    /// `(link, subnetwork holding its start node)`, ascending link.
    pub relative_sources: Vec<(LinkId, u32)>,
    /// `(link, subnetwork holding its end node)`, ascending link.
    pub relative_sinks: Vec<(LinkId, u32)>,
    /// Connections entering relative sources, ascending id.
    pub relative_source_connections: Vec<RoadConnection>,
    /// Connections leaving relative sinks, ascending id.
    pub relative_sink_connections: Vec<RoadConnection>,
    /// Split rows for relative sinks at their end nodes.
    pub boundary_splits: Vec<(SplitKey, SplitPiece)>,
    pub fragment: Scenario,
}

fn bad(index: u32, msg: alloc::string::String) -> ScenarioError {
    ScenarioError::Invariant(format!("subnetwork {index}: {msg}"))
}

impl Subnetwork {
    /// The whole scenario as a single subnetwork.
    pub fn whole(scenario: &Scenario) -> Self {
        Self {
            index: 0,
            n: 1,
            nodes: scenario.nodes().keys().copied().collect(),
            relative_sources: Vec::new(),
            relative_sinks: Vec::new(),
            relative_source_connections: Vec::new(),
            relative_sink_connections: Vec::new(),
            boundary_splits: Vec::new(),
            fragment: scenario.clone(),
        }
    }

    /// Checks that the boundary description agrees with the fragment.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let i = self.index;
        if i >= self.n {
            return Err(bad(i, format!("index not below subnetwork count {}", self.n)));
        }
        if self.nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad(i, "node list must be strictly ascending".into()));
        }
        for n in &self.nodes {
            if !self.fragment.nodes().contains_key(n) {
                return Err(bad(i, format!("node {n} missing from fragment")));
            }
        }
        let mut sources = BTreeSet::new();
        let mut sinks = BTreeSet::new();
        for l in self.fragment.links().values() {
            match (self.owns(l.start_node), self.owns(l.end_node)) {
                (true, true) => {}
                (true, false) => {
                    sinks.insert(l.id);
                }
                (false, true) => {
                    sources.insert(l.id);
                }
                (false, false) => return Err(bad(i, format!("link {} touches no node of the subset", l.id))),
            }
        }
        let listed = |v: &[(LinkId, u32)]| v.iter().map(|(l, _)| *l).collect::<BTreeSet<_>>();
        if listed(&self.relative_sources) != sources || self.relative_sources.len() != sources.len() {
            return Err(bad(i, "relative sources do not match the fragment".into()));
        }
        if listed(&self.relative_sinks) != sinks || self.relative_sinks.len() != sinks.len() {
            return Err(bad(i, "relative sinks do not match the fragment".into()));
        }
        for (l, peer) in self.relative_sources.iter().chain(&self.relative_sinks) {
            if *peer == i || *peer >= self.n {
                return Err(bad(i, format!("link {l}: invalid neighbor index {peer}")));
            }
        }
        for c in &self.relative_source_connections {
            if !sources.contains(&c.out_link) {
                return Err(bad(i, format!("connection {} does not enter a relative source", c.id)));
            }
        }
        for c in &self.relative_sink_connections {
            if !sinks.contains(&c.in_link) {
                return Err(bad(i, format!("connection {} does not leave a relative sink", c.id)));
            }
        }
        for (k, _) in &self.boundary_splits {
            if !sinks.contains(&k.in_link) {
                return Err(bad(i, format!("split row for link {} is not a relative sink", k.in_link)));
            }
        }
        Ok(())
    }

    pub fn owns(&self, node: NodeId) -> bool {
        self.nodes.binary_search(&node).is_ok()
    }

    /// Subnetwork holding the start node of a fragment link.
    pub fn start_owner(&self, link: LinkId) -> Option<u32> {
        let l = self.fragment.link(link)?;
        if self.owns(l.start_node) {
            return Some(self.index);
        }
        lookup(&self.relative_sources, link)
    }

    /// Subnetwork holding the end node of a fragment link.
    pub fn end_owner(&self, link: LinkId) -> Option<u32> {
        let l = self.fragment.link(link)?;
        if self.owns(l.end_node) {
            return Some(self.index);
        }
        lookup(&self.relative_sinks, link)
    }

    /// Links whose start node is in the subset; their state is owned here.
    pub fn owned_links(&self) -> Vec<LinkId> {
        self.fragment
            .links()
            .values()
            .filter(|l| self.owns(l.start_node))
            .map(|l| l.id)
            .collect()
    }

    /// Links with both ends in the subset.
    pub fn interior_links(&self) -> Vec<LinkId> {
        self.fragment
            .links()
            .values()
            .filter(|l| self.owns(l.start_node) && self.owns(l.end_node))
            .map(|l| l.id)
            .collect()
    }

    /// Neighboring subnetworks, ascending.
    pub fn neighbors(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self
            .relative_sources
            .iter()
            .chain(&self.relative_sinks)
            .map(|(_, p)| *p)
            .collect();
        set.into_iter().collect()
    }

    /// Road connections leaving a fragment link, wherever its end node lives.
    pub fn outgoing_connections(&self, link: LinkId) -> Vec<&RoadConnection> {
        let local: Vec<&RoadConnection> = self
            .fragment
            .outgoing_connections(link)
            .iter()
            .map(|c| &self.fragment.connections()[c])
            .collect();
        if !local.is_empty() {
            return local;
        }
        self.relative_sink_connections
            .iter()
            .filter(|c| c.in_link == link)
            .collect()
    }

    /// Road connections entering a fragment link, wherever its start node lives.
    pub fn incoming_connections(&self, link: LinkId) -> Vec<&RoadConnection> {
        let local: Vec<&RoadConnection> = self
            .fragment
            .incoming_connections(link)
            .iter()
            .map(|c| &self.fragment.connections()[c])
            .collect();
        if !local.is_empty() {
            return local;
        }
        self.relative_source_connections
            .iter()
            .filter(|c| c.out_link == link)
            .collect()
    }
}

fn lookup(list: &[(LinkId, u32)], link: LinkId) -> Option<u32> {
    list.binary_search_by_key(&link, |(l, _)| *l).ok().map(|i| list[i].1)
}

/// Cuts the scenario into one subnetwork per subset of the partition.
pub fn build_subnetworks(scenario: &Scenario, partition: &NodePartition) -> Result<Vec<Subnetwork>, ScenarioError> {
    let owner = |n: NodeId| partition.subset_of(n).expect("partition covers the scenario");
    let n = partition.n();
    let mut subs = Vec::with_capacity(n as usize);
    let mut members: Vec<Vec<NodeId>> = alloc::vec![Vec::new(); n as usize];
    for (node, i) in partition.assignment() {
        members[*i as usize].push(*node);
    }
    let mut links_of: Vec<BTreeSet<LinkId>> = alloc::vec![BTreeSet::new(); n as usize];
    for l in scenario.links().values() {
        links_of[owner(l.start_node) as usize].insert(l.id);
        links_of[owner(l.end_node) as usize].insert(l.id);
    }
    let full = scenario.to_parts();
    let conn_node: BTreeMap<_, _> = scenario
        .connections()
        .keys()
        .map(|c| (*c, scenario.connection_node(*c).unwrap()))
        .collect();

    for i in 0..n {
        let nodes = &members[i as usize];
        let mine = |node: NodeId| owner(node) == i;
        let links: Vec<_> = links_of[i as usize]
            .iter()
            .map(|l| scenario.links()[l].clone())
            .collect();
        let mut node_set: BTreeSet<NodeId> = nodes.iter().copied().collect();
        for l in &links {
            node_set.insert(l.start_node);
            node_set.insert(l.end_node);
        }
        let mut relative_sources = Vec::new();
        let mut relative_sinks = Vec::new();
        for l in &links {
            match (mine(l.start_node), mine(l.end_node)) {
                (false, true) => relative_sources.push((l.id, owner(l.start_node))),
                (true, false) => relative_sinks.push((l.id, owner(l.end_node))),
                _ => {}
            }
        }
        let is_rel_source = |l: LinkId| relative_sources.binary_search_by_key(&l, |(x, _)| *x).is_ok();
        let is_rel_sink = |l: LinkId| relative_sinks.binary_search_by_key(&l, |(x, _)| *x).is_ok();

        let connections = full
            .connections
            .iter()
            .filter(|c| mine(conn_node[&c.id]))
            .cloned()
            .collect();
        let relative_source_connections = full
            .connections
            .iter()
            .filter(|c| is_rel_source(c.out_link))
            .cloned()
            .collect();
        let relative_sink_connections = full
            .connections
            .iter()
            .filter(|c| is_rel_sink(c.in_link))
            .cloned()
            .collect();
        let splits = full.splits.iter().filter(|(k, _)| mine(k.node)).cloned().collect();
        let boundary_splits = full
            .splits
            .iter()
            .filter(|(k, _)| is_rel_sink(k.in_link))
            .cloned()
            .collect();
        let demands = full
            .demands
            .iter()
            .filter(|(l, _, _)| links_of[i as usize].contains(l))
            .copied()
            .collect();
        let fragment = Scenario::from_parts_with(
            ScenarioParts {
                nodes: node_set.into_iter().collect(),
                links,
                connections,
                vehicle_types: full.vehicle_types.clone(),
                splits,
                demands,
                sim: full.sim,
            },
            Validation::Fragment,
        )?;
        subs.push(Subnetwork {
            index: i,
            n,
            nodes: nodes.clone(),
            relative_sources,
            relative_sinks,
            relative_source_connections,
            relative_sink_connections,
            boundary_splits,
            fragment,
        });
    }
    Ok(subs)
}
