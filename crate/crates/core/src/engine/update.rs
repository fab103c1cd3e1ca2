use alloc::vec::Vec;

use super::commodity::{Commodity, CommodityMap};
use super::{EngineError, LaneGroupState};
use crate::ids::LinkId;

/// Negative values above this are rounding noise and are clamped to zero.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;
/// Largest per-step vehicle imbalance accepted on a link.
pub const CONSERVATION_TOLERANCE: f64 = 1e-9;

/// Flows across every cell boundary of one link during a step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkFlows {
    /// Per group; entry `i` moves from cell `i` to cell `i + 1`.
    pub internal: Vec<Vec<CommodityMap>>,
    /// Per group, into the first cell.
    pub inflow: Vec<CommodityMap>,
    /// Per group, out of the last cell.
    pub outflow: Vec<CommodityMap>,
}

/// Vehicle totals of one link around an update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LinkBalance {
    pub before: f64,
    pub entered: f64,
    pub left: f64,
    pub after: f64,
}

fn total_of(states: &[LaneGroupState]) -> f64 {
    states
        .iter()
        .flat_map(|g| g.cells.iter())
        .fold(0.0, |acc, c| acc + c.total())
}

fn conserve(n: &CommodityMap, inflow: &CommodityMap, outflow: &CommodityMap) -> Vec<(Commodity, f64)> {
    let mut keys: Vec<Commodity> = n
        .iter()
        .chain(inflow.iter())
        .chain(outflow.iter())
        .map(|(k, _)| k)
        .collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|k| (k, n.get(&k) + inflow.get(&k) - outflow.get(&k)))
        .collect()
}

/// Conservation update `n' = n + inflow - outflow` for every cell and
/// commodity of one link.
pub fn update_states(
    link: LinkId,
    states: &mut [LaneGroupState],
    flows: &LinkFlows,
) -> Result<LinkBalance, EngineError> {
    let before = total_of(states);
    let empty = CommodityMap::new();
    for (g, state) in states.iter_mut().enumerate() {
        let cells = state.cells.len();
        let mut next_cells = Vec::with_capacity(cells);
        for (i, cell) in state.cells.iter().enumerate() {
            let inflow = if i == 0 {
                flows.inflow.get(g).unwrap_or(&empty)
            } else {
                &flows.internal[g][i - 1]
            };
            let outflow = if i + 1 == cells {
                flows.outflow.get(g).unwrap_or(&empty)
            } else {
                &flows.internal[g][i]
            };
            let mut updated = CommodityMap::new();
            let entries = updated.entries_mut();
            for (k, v) in conserve(cell, inflow, outflow) {
                if v < -NEGATIVE_TOLERANCE {
                    return Err(EngineError::NegativeState {
                        link,
                        group: g as u32,
                        cell: i as u32,
                        commodity: k,
                        value: v,
                    });
                }
                if v > 0.0 {
                    entries.push((k, v));
                }
            }
            next_cells.push(updated);
        }
        state.cells = next_cells;
    }
    let entered = flows.inflow.iter().fold(0.0, |acc, m| acc + m.total());
    let left = flows.outflow.iter().fold(0.0, |acc, m| acc + m.total());
    let after = total_of(states);
    let imbalance = before + entered - left - after;
    if !(imbalance.abs() <= CONSERVATION_TOLERANCE) {
        return Err(EngineError::Conservation { link, imbalance });
    }
    Ok(LinkBalance {
        before,
        entered,
        left,
        after,
    })
}
