//! Sending and receiving functions of a single cell.

use super::commodity::CommodityMap;
use crate::scenario::FdParams;

/// Size of one cell of a lane group and the time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub lanes: u32,
    /// m
    pub cell_length: f64,
    /// s
    pub dt: f64,
}

impl CellGeometry {
    /// Vehicles that can cross a cell boundary in one step, `C`.
    pub fn capacity(&self, fd: &FdParams) -> f64 {
        fd.capacity * self.lanes as f64 * self.dt
    }

    /// Vehicles held by a jammed cell, `N_jam`.
    pub fn jam_vehicles(&self, fd: &FdParams) -> f64 {
        fd.jam_density * self.lanes as f64 * self.cell_length
    }
}

/// Per-commodity demand: `min(n, C)` split in proportion to the cell contents.
pub fn compute_demand(cell: &CommodityMap, fd: &FdParams, geom: &CellGeometry) -> CommodityMap {
    let n = cell.total();
    if n <= 0.0 {
        return CommodityMap::new();
    }
    let sent = n.min(geom.capacity(fd));
    cell.scaled(sent / n)
}

/// Supply `min(C, (w/v)(N_jam - n))`, never negative.
pub fn compute_supply(cell: &CommodityMap, fd: &FdParams, geom: &CellGeometry) -> f64 {
    supply_for_total(cell.total(), fd, geom)
}

pub(crate) fn supply_for_total(n: f64, fd: &FdParams, geom: &CellGeometry) -> f64 {
    let room = fd.wave_ratio() * (geom.jam_vehicles(fd) - n);
    geom.capacity(fd).min(room).max(0.0)
}
