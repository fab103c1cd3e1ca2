use alloc::vec::Vec;

use super::cell::CellGeometry;
use super::commodity::{Commodity, NextLink};
use super::LaneGroupState;
use crate::scenario::{FdParams, LinkLayout};

fn served(layout: &LinkLayout, group: usize, next: NextLink) -> bool {
    match next {
        NextLink::Link(l) => layout.groups[group].serves(l),
        NextLink::Exit => layout.is_sink(),
    }
}

/// Lateral movements within one link.
///
/// In every cell, a fraction `rate` of each commodity whose next link is not
/// served by its lane group moves one group toward the nearest group that
/// serves it. Moves into a cell are scaled down together when they would
/// exceed the room left in that cell before any movement. Vehicles per
/// (cell, commodity) summed over groups are conserved.
pub fn apply_lane_changes(
    states: &mut [LaneGroupState],
    layout: &LinkLayout,
    fd: &FdParams,
    dt: f64,
    rate: f64,
) {
    let groups = layout.groups.len();
    if groups < 2 || rate == 0.0 {
        return;
    }
    let cells = layout.cell_count as usize;
    let mut moves: Vec<(usize, usize, Commodity, f64)> = Vec::new();
    for cell in 0..cells {
        moves.clear();
        for g in 0..groups {
            for (k, n) in states[g].cells[cell].iter() {
                if served(layout, g, k.next) {
                    continue;
                }
                let nearest = (0..groups)
                    .filter(|h| served(layout, *h, k.next))
                    .min_by_key(|h| (h.abs_diff(g), *h));
                let Some(h) = nearest else { continue };
                let target = if h > g { g + 1 } else { g - 1 };
                moves.push((g, target, k, rate * n));
            }
        }
        if moves.is_empty() {
            continue;
        }
        let mut scale = alloc::vec![1.0f64; groups];
        for (target, s) in scale.iter_mut().enumerate() {
            let wanted = moves
                .iter()
                .filter(|m| m.1 == target)
                .fold(0.0, |acc, m| acc + m.3);
            if wanted == 0.0 {
                continue;
            }
            let geom = CellGeometry {
                lanes: layout.groups[target].lanes.len(),
                cell_length: layout.cell_length,
                dt,
            };
            let room = (geom.jam_vehicles(fd) - states[target].cells[cell].total()).max(0.0);
            if wanted > room {
                *s = room / wanted;
            }
        }
        for &(from, to, k, amount) in moves.iter() {
            let moved = amount * scale[to];
            states[from].cells[cell].add(k, -moved);
            states[to].cells[cell].add(k, moved);
        }
    }
}
