//! Node partitioning, subnetwork fragments, metagraph and decoder maps.

mod decoder;
mod greedy;
mod metagraph;
mod subnetwork;

pub use decoder::{build_decoder_maps, decoder_map, DecoderMap};
pub use greedy::{partition_nodes, BALANCE_TOLERANCE};
pub use metagraph::{build_metagraph, Metagraph};
pub use subnetwork::{build_subnetworks, Subnetwork};

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::ids::NodeId;
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("subset count {n} out of range for {nodes} nodes")]
    CountOutOfRange { n: u32, nodes: usize },
    #[error("node {0} is not assigned to any subset")]
    MissingNode(NodeId),
    #[error("node {0} is not part of the scenario")]
    UnknownNode(NodeId),
    #[error("node {node} assigned twice")]
    DuplicateNode { node: NodeId },
    #[error("node {node}: subset index {index} is not below {n}")]
    IndexOutOfRange { node: NodeId, index: u32, n: u32 },
    #[error("subset {0} is empty")]
    EmptySubset(u32),
}

/// Assignment of every node to one of `n` non-empty subsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePartition {
    n: u32,
    assignment: BTreeMap<NodeId, u32>,
}

impl NodePartition {
    /// Validates an assignment against the scenario's node set.
    pub fn new(
        scenario: &Scenario,
        n: u32,
        assignment: impl IntoIterator<Item = (NodeId, u32)>,
    ) -> Result<Self, PartitionError> {
        if n == 0 || n as usize > scenario.nodes().len() {
            return Err(PartitionError::CountOutOfRange {
                n,
                nodes: scenario.nodes().len(),
            });
        }
        let mut map = BTreeMap::new();
        for (node, index) in assignment {
            if !scenario.nodes().contains_key(&node) {
                return Err(PartitionError::UnknownNode(node));
            }
            if index >= n {
                return Err(PartitionError::IndexOutOfRange { node, index, n });
            }
            if map.insert(node, index).is_some() {
                return Err(PartitionError::DuplicateNode { node });
            }
        }
        if let Some(missing) = scenario.nodes().keys().find(|k| !map.contains_key(k)) {
            return Err(PartitionError::MissingNode(*missing));
        }
        let mut sizes = alloc::vec![0usize; n as usize];
        for i in map.values() {
            sizes[*i as usize] += 1;
        }
        if let Some(empty) = sizes.iter().position(|s| *s == 0) {
            return Err(PartitionError::EmptySubset(empty as u32));
        }
        Ok(Self { n, assignment: map })
    }

    /// Every node in subset 0.
    pub fn single(scenario: &Scenario) -> Self {
        Self {
            n: 1,
            assignment: scenario.nodes().keys().map(|k| (*k, 0)).collect(),
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn subset_of(&self, node: NodeId) -> Option<u32> {
        self.assignment.get(&node).copied()
    }

    pub fn assignment(&self) -> &BTreeMap<NodeId, u32> {
        &self.assignment
    }

    /// Nodes of subset `index`, ascending.
    pub fn subset(&self, index: u32) -> Vec<NodeId> {
        self.assignment
            .iter()
            .filter(|(_, i)| **i == index)
            .map(|(k, _)| *k)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0usize; self.n as usize];
        for i in self.assignment.values() {
            sizes[*i as usize] += 1;
        }
        sizes
    }

    /// Links whose end nodes lie in different subsets.
    pub fn cut_links(&self, scenario: &Scenario) -> usize {
        scenario
            .links()
            .values()
            .filter(|l| self.assignment[&l.start_node] != self.assignment[&l.end_node])
            .count()
    }
}
