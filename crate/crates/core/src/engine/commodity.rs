use alloc::vec::Vec;
use core::fmt;

use crate::ids::{LinkId, VehicleTypeId};

/// Next downstream link of a vehicle, or leaving the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NextLink {
    Link(LinkId),
    Exit,
}

impl NextLink {
    /// Integer form used in dumps and on the wire: the link id, or -1 for exit.
    pub fn as_i64(self) -> i64 {
        match self {
            NextLink::Link(l) => l.0 as i64,
            NextLink::Exit => -1,
        }
    }

    pub fn from_i64(v: i64) -> Option<Self> {
        match v {
            -1 => Some(NextLink::Exit),
            0..=0xFFFF_FFFF => Some(NextLink::Link(LinkId(v as u32))),
            _ => None,
        }
    }

    pub fn link(self) -> Option<LinkId> {
        match self {
            NextLink::Link(l) => Some(l),
            NextLink::Exit => None,
        }
    }
}

impl fmt::Display for NextLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i64())
    }
}

/// State index of macroscopic vehicles: type and next downstream link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Commodity {
    pub vehicle_type: VehicleTypeId,
    pub next: NextLink,
}

impl Commodity {
    pub fn new(vehicle_type: VehicleTypeId, next: NextLink) -> Self {
        Self { vehicle_type, next }
    }
}

impl fmt::Display for Commodity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(type {}, next {})", self.vehicle_type, self.next)
    }
}

/// Vehicles per commodity, kept sorted by commodity. Exact zeros are never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommodityMap(Vec<(Commodity, f64)>);

impl CommodityMap {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    /// Builds a map from arbitrary pairs, summing duplicates in input order.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Commodity, f64)>) -> Self {
        let mut m = Self::new();
        for (k, v) in pairs {
            m.add(k, v);
        }
        m
    }

    pub fn get(&self, k: &Commodity) -> f64 {
        self.0
            .binary_search_by(|(c, _)| c.cmp(k))
            .map_or(0.0, |i| self.0[i].1)
    }

    /// `self[k] += v`; zero additions are ignored and entries that become
    /// exactly zero are removed.
    pub fn add(&mut self, k: Commodity, v: f64) {
        if v == 0.0 {
            return;
        }
        match self.0.binary_search_by(|(c, _)| c.cmp(&k)) {
            Ok(i) => {
                let nv = self.0[i].1 + v;
                if nv == 0.0 {
                    self.0.remove(i);
                } else {
                    self.0[i].1 = nv;
                }
            }
            Err(i) => self.0.insert(i, (k, v)),
        }
    }

    /// Sum of all entries, in commodity order.
    pub fn total(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, (_, v)| acc + v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Commodity, f64)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Every entry multiplied by `factor`; a factor of exactly one returns a copy.
    pub fn scaled(&self, factor: f64) -> Self {
        if factor == 1.0 {
            return self.clone();
        }
        Self(
            self.0
                .iter()
                .map(|(k, v)| (*k, v * factor))
                .filter(|(_, v)| *v != 0.0)
                .collect(),
        )
    }

    pub(crate) fn entries_mut(&mut self) -> &mut Vec<(Commodity, f64)> {
        &mut self.0
    }
}
