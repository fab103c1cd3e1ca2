//! Built-in partitioner: breadth-first region growing from pseudo-peripheral
//! seeds, then boundary refinement with single moves and pairwise swaps.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::{NodePartition, PartitionError};
use crate::ids::NodeId;
use crate::scenario::Scenario;

/// Largest subset may hold at most this factor times the average size
/// (rounded up).
pub const BALANCE_TOLERANCE: f64 = 1.1;

const REFINE_PASSES: usize = 16;
const UNASSIGNED: u32 = u32::MAX;

/// `ceil(1.1 * nodes / n)` in integer arithmetic.
pub(crate) fn max_subset_size(nodes: usize, n: u32) -> usize {
    let n = n as usize;
    (11 * nodes + 10 * n - 1) / (10 * n)
}

struct Graph {
    ids: Vec<NodeId>,
    /// `(neighbor, number of links between the two)`, ascending neighbor.
    adj: Vec<Vec<(usize, u32)>>,
}

impl Graph {
    fn new(scenario: &Scenario) -> Self {
        let ids: Vec<NodeId> = scenario.nodes().keys().copied().collect();
        let index: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let mut maps: Vec<BTreeMap<usize, u32>> = vec![BTreeMap::new(); ids.len()];
        for l in scenario.links().values() {
            let a = index[&l.start_node];
            let b = index[&l.end_node];
            *maps[a].entry(b).or_insert(0) += 1;
            *maps[b].entry(a).or_insert(0) += 1;
        }
        let adj = maps.into_iter().map(|m| m.into_iter().collect()).collect();
        Self { ids, adj }
    }

    fn len(&self) -> usize {
        self.ids.len()
    }
}

/// Farthest unassigned node (by hops) from a random unassigned start, twice.
fn pseudo_peripheral(g: &Graph, part: &[u32], rng: &mut ChaCha8Rng) -> usize {
    let free: Vec<usize> = (0..g.len()).filter(|v| part[*v] == UNASSIGNED).collect();
    let mut v = free[(rng.next_u64() % free.len() as u64) as usize];
    let mut seen = vec![false; g.len()];
    for _ in 0..2 {
        seen.iter_mut().for_each(|s| *s = false);
        let mut queue = VecDeque::from([v]);
        seen[v] = true;
        let mut last = v;
        while let Some(u) = queue.pop_front() {
            last = u;
            for &(w, _) in &g.adj[u] {
                if !seen[w] && part[w] == UNASSIGNED {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        v = last;
    }
    v
}

fn grow(g: &Graph, n: u32, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let total = g.len();
    let base = total / n as usize;
    let extra = total % n as usize;
    let mut part = vec![UNASSIGNED; total];
    for p in 0..n - 1 {
        let target = base + usize::from((p as usize) < extra);
        let seed = pseudo_peripheral(g, &part, rng);
        let mut queue = VecDeque::from([seed]);
        let mut count = 0;
        while count < target {
            let v = match queue.pop_front() {
                Some(v) => v,
                None => {
                    // region ran out of reachable nodes: continue next to it, or anywhere
                    let near = (0..total).find(|v| {
                        part[*v] == UNASSIGNED && g.adj[*v].iter().any(|(w, _)| part[*w] == p)
                    });
                    near.unwrap_or_else(|| (0..total).find(|v| part[*v] == UNASSIGNED).unwrap())
                }
            };
            if part[v] != UNASSIGNED {
                continue;
            }
            part[v] = p;
            count += 1;
            for &(w, _) in &g.adj[v] {
                if part[w] == UNASSIGNED {
                    queue.push_back(w);
                }
            }
        }
    }
    for p in part.iter_mut().filter(|p| **p == UNASSIGNED) {
        *p = n - 1;
    }
    part
}

fn weights(g: &Graph, part: &[u32], v: usize, out: &mut Vec<(u32, u32)>) {
    out.clear();
    for &(w, c) in &g.adj[v] {
        match out.iter_mut().find(|(p, _)| *p == part[w]) {
            Some(e) => e.1 += c,
            None => out.push((part[w], c)),
        }
    }
}

fn weight_to(g: &Graph, part: &[u32], v: usize, p: u32) -> i64 {
    g.adj[v]
        .iter()
        .filter(|(w, _)| part[*w] == p)
        .map(|(_, c)| *c as i64)
        .sum()
}

/// Best other subset for `v`: `(subset, cut reduction)`.
fn best_move(part: &[u32], sizes: &[usize], v: usize, w: &[(u32, u32)]) -> Option<(u32, i64)> {
    let own = w.iter().find(|(p, _)| *p == part[v]).map_or(0, |(_, c)| *c as i64);
    w.iter()
        .filter(|(p, _)| *p != part[v])
        .map(|(p, c)| (*p, *c as i64 - own))
        .max_by(|a, b| {
            a.1.cmp(&b.1)
                .then(sizes[b.0 as usize].cmp(&sizes[a.0 as usize]))
                .then(b.0.cmp(&a.0))
        })
}

fn refine(g: &Graph, part: &mut [u32], n: u32) {
    let max_size = max_subset_size(g.len(), n);
    let mut sizes = vec![0usize; n as usize];
    for p in part.iter() {
        sizes[*p as usize] += 1;
    }
    let mut w = Vec::new();
    for _ in 0..REFINE_PASSES {
        let mut changed = false;
        for v in 0..g.len() {
            let p = part[v];
            if sizes[p as usize] <= 1 {
                continue;
            }
            weights(g, part, v, &mut w);
            let Some((q, gain)) = best_move(part, &sizes, v, &w) else {
                continue;
            };
            let fits = sizes[q as usize] < max_size;
            let balances = sizes[q as usize] + 1 < sizes[p as usize];
            if (gain > 0 && fits) || (gain == 0 && balances) {
                part[v] = q;
                sizes[p as usize] -= 1;
                sizes[q as usize] += 1;
                changed = true;
            }
        }
        // swaps across full subsets
        for v in 0..g.len() {
            let p = part[v];
            weights(g, part, v, &mut w);
            let Some((q, gain_v)) = best_move(part, &sizes, v, &w) else {
                continue;
            };
            if gain_v <= 0 || sizes[q as usize] < max_size {
                continue;
            }
            let partner = g.adj[v].iter().find(|(u, c)| {
                part[*u] == q && {
                    let gain_u = weight_to(g, part, *u, p) - weight_to(g, part, *u, q);
                    gain_v + gain_u - 2 * *c as i64 > 0
                }
            });
            if let Some(&(u, _)) = partner {
                part[v] = q;
                part[u] = p;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

/// Splits the scenario's nodes into `n` balanced subsets with few cut links.
///
/// The result is a deterministic function of the scenario, `n` and `seed`.
pub fn partition_nodes(scenario: &Scenario, n: u32, seed: u64) -> Result<NodePartition, PartitionError> {
    let g = Graph::new(scenario);
    if n == 0 || n as usize > g.len() {
        return Err(PartitionError::CountOutOfRange { n, nodes: g.len() });
    }
    if n == 1 {
        return Ok(NodePartition::single(scenario));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut part = grow(&g, n, &mut rng);
    refine(&g, &mut part, n);
    Ok(NodePartition {
        n,
        assignment: g.ids.iter().copied().zip(part).collect(),
    })
}
