use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::Subnetwork;
use crate::ids::LinkId;

/// Which subnetworks share overlap links.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metagraph {
    n: u32,
    /// `(i, j)` with `i < j` to the overlap links joining them, ascending.
    edges: BTreeMap<(u32, u32), Vec<LinkId>>,
}

impl Metagraph {
    pub fn new(n: u32, edges: BTreeMap<(u32, u32), Vec<LinkId>>) -> Self {
        Self { n, edges }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn edges(&self) -> &BTreeMap<(u32, u32), Vec<LinkId>> {
        &self.edges
    }

    pub fn neighbors(&self, i: u32) -> Vec<u32> {
        let set: BTreeSet<u32> = self
            .edges
            .keys()
            .filter_map(|(a, b)| match (*a == i, *b == i) {
                (true, _) => Some(*b),
                (_, true) => Some(*a),
                _ => None,
            })
            .collect();
        set.into_iter().collect()
    }

    pub fn overlap_links(&self, i: u32, j: u32) -> &[LinkId] {
        self.edges
            .get(&(i.min(j), i.max(j)))
            .map_or(&[], |v| v.as_slice())
    }
}

/// Metagraph of a full set of subnetworks, from their relative sinks.
pub fn build_metagraph(subnetworks: &[Subnetwork]) -> Metagraph {
    let mut edges: BTreeMap<(u32, u32), Vec<LinkId>> = BTreeMap::new();
    for sub in subnetworks {
        for (link, peer) in &sub.relative_sinks {
            let key = (sub.index.min(*peer), sub.index.max(*peer));
            edges.entry(key).or_default().push(*link);
        }
    }
    for links in edges.values_mut() {
        links.sort();
    }
    Metagraph {
        n: subnetworks.len() as u32,
        edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::NodeId;
    use crate::partition::{build_subnetworks, NodePartition};
    use crate::scenario::fixtures::{link, sim};
    use crate::scenario::{Scenario, ScenarioParts};
    use alloc::vec;

    fn path(nodes: u32) -> Scenario {
        Scenario::from_parts(ScenarioParts {
            nodes: (0..nodes).map(NodeId).collect(),
            links: (0..nodes - 1).map(|i| link(i, i, i + 1, 1, false)).collect(),
            connections: vec![],
            vehicle_types: vec![],
            splits: vec![],
            demands: vec![],
            sim: sim(),
        })
        .unwrap()
    }

    #[test]
    fn single_subnetwork_has_no_edges() {
        let s = path(3);
        let subs = build_subnetworks(&s, &NodePartition::single(&s)).unwrap();
        assert!(build_metagraph(&subs).edges().is_empty());
    }

    #[test]
    fn path_split_four_ways_gives_path_metagraph() {
        let s = path(8);
        let p = NodePartition::new(&s, 4, (0..8).map(|i| (NodeId(i), i / 2))).unwrap();
        let m = build_metagraph(&build_subnetworks(&s, &p).unwrap());
        let keys: Vec<_> = m.edges().keys().copied().collect();
        assert_eq!(keys, vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(m.overlap_links(2, 1), &[LinkId(3)]);
        assert_eq!(m.neighbors(1), vec![0, 2]);
        assert_eq!(m.neighbors(0), vec![1]);
    }

    #[test]
    fn uncut_partition_has_no_edges() {
        // two disconnected links, one per subset
        let s = Scenario::from_parts(ScenarioParts {
            nodes: (0..4).map(NodeId).collect(),
            links: vec![link(0, 0, 1, 1, false), link(1, 2, 3, 1, false)],
            connections: vec![],
            vehicle_types: vec![],
            splits: vec![],
            demands: vec![],
            sim: sim(),
        })
        .unwrap();
        let p = NodePartition::new(&s, 2, (0..4).map(|i| (NodeId(i), i / 2))).unwrap();
        let m = build_metagraph(&build_subnetworks(&s, &p).unwrap());
        assert!(m.edges().is_empty());
    }
}
