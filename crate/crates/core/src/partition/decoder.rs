use alloc::vec::Vec;

use super::Subnetwork;
use crate::engine::{Commodity, LaneGroupRef, NextLink, Slot};
use crate::ids::LinkId;
use crate::scenario::{LinkLayout, Routing};

/// Layout of the boundary message from `sender` to `receiver`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoderMap {
    pub sender: u32,
    pub receiver: u32,
    slots: Vec<Slot>,
}

impl DecoderMap {
    /// Slots are sorted into canonical order and deduplicated.
    pub fn new(sender: u32, receiver: u32, mut slots: Vec<Slot>) -> Self {
        slots.sort();
        slots.dedup();
        Self {
            sender,
            receiver,
            slots,
        }
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Message length in floats.
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn position(&self, slot: &Slot) -> Option<usize> {
        self.slots.binary_search(slot).ok()
    }

    /// First position where two maps disagree, with the slot each holds there.
    pub fn first_difference(&self, other: &DecoderMap) -> Option<(usize, Option<Slot>, Option<Slot>)> {
        let n = self.slots.len().max(other.slots.len());
        (0..n)
            .map(|i| (i, self.slots.get(i).copied(), other.slots.get(i).copied()))
            .find(|(_, a, b)| a != b)
    }
}

fn layout(local: &Subnetwork, link: LinkId) -> LinkLayout {
    let l = local.fragment.link(link).expect("overlap link is in the fragment");
    LinkLayout::new(l, &local.outgoing_connections(link), local.fragment.sim().dt)
        .expect("fragment links satisfy the step-distance condition")
}

/// Decoder map for direction `sender -> receiver`, computed from the data of
/// `local`, which must be one of the two.
///
/// The sender computes the node models at its own nodes, so the message
/// carries flow entering overlap links that run from sender to receiver
/// (one slot per entering connection, target lane group, vehicle type and
/// possible next link), and flow leaving overlap links that run from receiver
/// to sender (one slot per leaving connection, serving lane group and vehicle
/// type that may take the connection).
pub fn decoder_map(local: &Subnetwork, sender: u32, receiver: u32) -> DecoderMap {
    debug_assert!(local.index == sender || local.index == receiver);
    let types = local.fragment.vehicle_types();
    let mut slots = Vec::new();
    let peer = if local.index == sender { receiver } else { sender };
    let overlaps = local.relative_sinks.iter().chain(&local.relative_sources);
    for (link, _) in overlaps.filter(|(_, p)| *p == peer) {
        let ends = (local.start_owner(*link), local.end_owner(*link));
        if ends == (Some(sender), Some(receiver)) {
            let lay = layout(local, *link);
            for c in local.incoming_connections(*link) {
                for (h, _) in lay.targets(c) {
                    let group = LaneGroupRef { link: *link, index: h };
                    for vt in types.values() {
                        let mut push = |next| {
                            slots.push(Slot {
                                connection: c.id,
                                lane_group: group,
                                commodity: Commodity::new(vt.id, next),
                            })
                        };
                        match &vt.routing {
                            Routing::Deterministic(_) => {
                                if vt.may_turn(c.in_link, *link) {
                                    let next = vt.path_successor(*link).flatten();
                                    push(next.map_or(NextLink::Exit, NextLink::Link));
                                }
                            }
                            Routing::Probabilistic if lay.is_sink() => push(NextLink::Exit),
                            Routing::Probabilistic => {
                                for s in &lay.successors {
                                    push(NextLink::Link(*s));
                                }
                            }
                        }
                    }
                }
            }
        } else if ends == (Some(receiver), Some(sender)) {
            let lay = layout(local, *link);
            for c in local.outgoing_connections(*link) {
                for g in lay.groups.iter().filter(|g| g.route(c.out_link) == Some(c.id)) {
                    for vt in types.values().filter(|vt| vt.may_turn(*link, c.out_link)) {
                        slots.push(Slot {
                            connection: c.id,
                            lane_group: LaneGroupRef {
                                link: *link,
                                index: g.index,
                            },
                            commodity: Commodity::new(vt.id, NextLink::Link(c.out_link)),
                        });
                    }
                }
            }
        }
    }
    DecoderMap::new(sender, receiver, slots)
}

/// Both directions of a metagraph edge: `i -> j` from `i`'s data and
/// `j -> i` from `j`'s data.
pub fn build_decoder_maps(i: &Subnetwork, j: &Subnetwork) -> (DecoderMap, DecoderMap) {
    (decoder_map(i, i.index, j.index), decoder_map(j, j.index, i.index))
}
