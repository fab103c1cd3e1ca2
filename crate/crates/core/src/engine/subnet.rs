use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::cell::{compute_demand, compute_supply, CellGeometry};
use super::commodity::{CommodityMap, NextLink};
use super::lane_change::apply_lane_changes;
use super::node::{resolve_node_flows, ConnectionDemand, SupplyTable};
use super::record::{FlowRecord, LaneGroupRef, Slot};
use super::routing::{assign_downstream, compute_connection_demands, RoutingContext};
use super::update::{update_states, LinkFlows};
use super::{EngineError, LaneGroupState};
use crate::ids::{ConnectionId, LinkId, VehicleTypeId};
use crate::partition::Subnetwork;
use crate::scenario::{DemandProfile, Link, LinkLayout, RoadConnection, Scenario, SimParams};

struct LinkEntry {
    link: Link,
    layout: LinkLayout,
    start_owner: u32,
    end_owner: u32,
}

impl LinkEntry {
    fn geometry(&self, group: usize, dt: f64) -> CellGeometry {
        CellGeometry {
            lanes: self.layout.groups[group].lanes.len(),
            cell_length: self.layout.cell_length,
            dt,
        }
    }
}

struct NodeEntry {
    incoming: Vec<LinkId>,
}

/// Flows computed in phase a and applied in phase b.
#[derive(Default)]
struct Pending {
    internal: BTreeMap<LinkId, Vec<Vec<CommodityMap>>>,
    injected: BTreeMap<LinkId, Vec<CommodityMap>>,
    discharged: BTreeMap<LinkId, Vec<CommodityMap>>,
    records: Vec<FlowRecord>,
}

/// Vehicle totals over the links owned by one subnetwork after a step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepTally {
    /// Index of the completed step.
    pub step: u64,
    pub in_network: f64,
    /// Vehicles injected at source links during the step.
    pub entered: f64,
    /// Vehicles discharged from sink links during the step.
    pub exited: f64,
    /// Vehicles waiting in source queues.
    pub queued: f64,
}

/// One nonzero state entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRow {
    pub link: LinkId,
    pub lane_group: u32,
    pub cell: u32,
    pub vehicle_type: VehicleTypeId,
    pub next: NextLink,
    pub vehicles: f64,
}

/// Cell-transmission state and step logic for one subnetwork.
///
/// All flows of a step are expressed as [`FlowRecord`]s, whether they stay
/// local or cross to a neighbor, and every link is updated from the sorted
/// record set. A whole-network engine and a set of subnetwork engines
/// therefore perform the same floating-point operations in the same order.
pub struct SubnetworkEngine {
    index: u32,
    sim: SimParams,
    links: BTreeMap<LinkId, LinkEntry>,
    states: BTreeMap<LinkId, Vec<LaneGroupState>>,
    nodes: Vec<NodeEntry>,
    connections: BTreeMap<ConnectionId, RoadConnection>,
    routing: RoutingContext,
    demands: DemandProfile,
    queues: BTreeMap<(LinkId, VehicleTypeId), f64>,
    peers: Vec<u32>,
    step: u64,
    pending: Option<Pending>,
}

impl SubnetworkEngine {
    pub fn new(sub: &Subnetwork) -> Result<Self, EngineError> {
        let frag = &sub.fragment;
        let dt = frag.sim().dt;
        let mut links = BTreeMap::new();
        let mut states = BTreeMap::new();
        for link in frag.links().values() {
            let layout = LinkLayout::new(link, &sub.outgoing_connections(link.id), dt)?;
            let cells = layout.cell_count as usize;
            states.insert(link.id, alloc::vec![LaneGroupState::empty(cells); layout.groups.len()]);
            links.insert(
                link.id,
                LinkEntry {
                    link: link.clone(),
                    layout,
                    start_owner: sub.start_owner(link.id).expect("fragment link"),
                    end_owner: sub.end_owner(link.id).expect("fragment link"),
                },
            );
        }
        let nodes = sub
            .nodes
            .iter()
            .map(|id| {
                let mut incoming = frag.nodes()[id].incoming.clone();
                incoming.sort();
                NodeEntry { incoming }
            })
            .collect();
        let mut connections = frag.connections().clone();
        for c in sub
            .relative_source_connections
            .iter()
            .chain(&sub.relative_sink_connections)
        {
            connections.insert(c.id, c.clone());
        }
        let mut splits = frag.splits().clone();
        for (k, p) in &sub.boundary_splits {
            splits.insert(*k, p.clone());
        }
        let queues = frag
            .demands()
            .entries()
            .map(|((l, t), _)| ((*l, *t), 0.0))
            .collect();
        Ok(Self {
            index: sub.index,
            sim: *frag.sim(),
            links,
            states,
            nodes,
            connections,
            routing: RoutingContext::new(frag.vehicle_types().clone(), splits),
            demands: frag.demands().clone(),
            queues,
            peers: sub.neighbors(),
            step: 0,
            pending: None,
        })
    }

    /// Engine for the whole scenario.
    pub fn for_scenario(scenario: &Scenario) -> Result<Self, EngineError> {
        Self::new(&Subnetwork::whole(scenario))
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    /// Index of the next step to run.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn peers(&self) -> &[u32] {
        &self.peers
    }

    /// Links whose state this subnetwork owns, ascending.
    pub fn owned_links(&self) -> Vec<LinkId> {
        self.links
            .iter()
            .filter(|(_, e)| e.start_owner == self.index)
            .map(|(id, _)| *id)
            .collect()
    }

    pub fn layout(&self, link: LinkId) -> Option<&LinkLayout> {
        self.links.get(&link).map(|e| &e.layout)
    }

    pub fn state(&self, link: LinkId) -> Option<&[LaneGroupState]> {
        self.states.get(&link).map(|s| s.as_slice())
    }

    /// Lane changes, demand and supply, source injection, sink discharge and
    /// the node model at every node of the subset.
    ///
    /// Returns the records each neighbor needs, keyed by neighbor (every
    /// neighbor gets an entry, possibly empty).
    pub fn phase_a(&mut self) -> Result<BTreeMap<u32, Vec<FlowRecord>>, EngineError> {
        let dt = self.sim.dt;
        let t = self.step as f64 * dt;
        let mut pending = Pending::default();
        let mut last_demand: BTreeMap<LinkId, Vec<CommodityMap>> = BTreeMap::new();
        let mut supplies = SupplyTable::new();

        for (id, entry) in &self.links {
            let state = self.states.get_mut(id).unwrap();
            apply_lane_changes(state, &entry.layout, &entry.link.fd, dt, self.sim.lane_change_rate);

            let mut internal = Vec::with_capacity(state.len());
            let mut last = Vec::with_capacity(state.len());
            for (g, group) in state.iter().enumerate() {
                let geom = entry.geometry(g, dt);
                let fd = &entry.link.fd;
                let mut flows = Vec::with_capacity(group.cells.len().saturating_sub(1));
                for w in group.cells.windows(2) {
                    let d = compute_demand(&w[0], fd, &geom);
                    let s = compute_supply(&w[1], fd, &geom);
                    let total = d.total();
                    flows.push(if total <= s { d } else { d.scaled(s / total) });
                }
                internal.push(flows);
                last.push(compute_demand(group.cells.last().unwrap(), fd, &geom));
                supplies.insert((*id, g as u32), compute_supply(&group.cells[0], fd, &geom));
            }
            pending.internal.insert(*id, internal);
            if entry.layout.is_sink() {
                pending.discharged.insert(*id, last.clone());
            }
            last_demand.insert(*id, last);
        }

        self.inject(t, &supplies, &mut pending)?;

        for node in &self.nodes {
            let mut demands: BTreeMap<ConnectionId, ConnectionDemand> = BTreeMap::new();
            for k in &node.incoming {
                let entry = &self.links[k];
                if entry.layout.is_sink() {
                    continue;
                }
                for (g, group) in entry.layout.groups.iter().enumerate() {
                    let per_conn = compute_connection_demands(&last_demand[k][g], group, &entry.layout)?;
                    for (c, map) in per_conn {
                        let rc = &self.connections[&c];
                        demands
                            .entry(c)
                            .or_insert_with(|| ConnectionDemand {
                                connection: c,
                                out_link: rc.out_link,
                                per_group: Vec::new(),
                                targets: self.links[&rc.out_link].layout.targets(rc),
                            })
                            .per_group
                            .push((g as u32, map));
                    }
                }
            }
            if demands.is_empty() {
                continue;
            }
            let demands: Vec<ConnectionDemand> = demands.into_values().collect();
            for packet in resolve_node_flows(&demands, &supplies) {
                let rc = &self.connections[&packet.connection];
                let mut by_type: BTreeMap<VehicleTypeId, f64> = BTreeMap::new();
                for (g, map) in &packet.per_group {
                    for (k, v) in map.iter() {
                        pending.records.push(FlowRecord {
                            slot: Slot {
                                connection: rc.id,
                                lane_group: LaneGroupRef {
                                    link: rc.in_link,
                                    index: *g,
                                },
                                commodity: k,
                            },
                            vehicles: v,
                        });
                        *by_type.entry(k.vehicle_type).or_insert(0.0) += v;
                    }
                }
                let target = &self.links[&rc.out_link];
                let mut assigned = Vec::new();
                for (h, share) in &packet.targets {
                    for (vt, amount) in &by_type {
                        assigned.clear();
                        assign_downstream(
                            &self.routing,
                            &target.layout,
                            target.link.end_node,
                            *vt,
                            amount * share,
                            t,
                            &mut assigned,
                        )?;
                        for (k, v) in &assigned {
                            pending.records.push(FlowRecord {
                                slot: Slot {
                                    connection: rc.id,
                                    lane_group: LaneGroupRef {
                                        link: rc.out_link,
                                        index: *h,
                                    },
                                    commodity: *k,
                                },
                                vehicles: *v,
                            });
                        }
                    }
                }
            }
        }
        pending.records.retain(|r| r.vehicles != 0.0);

        let mut outbound: BTreeMap<u32, Vec<FlowRecord>> =
            self.peers.iter().map(|p| (*p, Vec::new())).collect();
        for r in &pending.records {
            let dest = self.destination(&r.slot)?;
            if dest != self.index {
                outbound.get_mut(&dest).expect("destination is a neighbor").push(*r);
            }
        }
        self.pending = Some(pending);
        Ok(outbound)
    }

    /// Subnetwork that must also apply a record: the one at the other end of
    /// the link the record changes.
    fn destination(&self, slot: &Slot) -> Result<u32, EngineError> {
        let rc = self
            .connections
            .get(&slot.connection)
            .ok_or(EngineError::ForeignRecord {
                connection: slot.connection,
            })?;
        let link = slot.lane_group.link;
        let entry = self.links.get(&link).ok_or(EngineError::ForeignRecord {
            connection: slot.connection,
        })?;
        Ok(if link == rc.out_link {
            entry.end_owner
        } else {
            entry.start_owner
        })
    }

    fn inject(&mut self, t: f64, supplies: &SupplyTable, pending: &mut Pending) -> Result<(), EngineError> {
        let dt = self.sim.dt;
        for (id, entry) in &self.links {
            if !entry.link.is_source {
                continue;
            }
            let types: Vec<VehicleTypeId> = self.demands.types_on(*id).collect();
            if types.is_empty() {
                continue;
            }
            let mut queued: Vec<f64> = Vec::with_capacity(types.len());
            for vt in &types {
                let q = self.queues[&(*id, *vt)] + self.demands.rate(*id, *vt, t) * dt;
                queued.push(q);
            }
            let total = queued.iter().fold(0.0, |acc, q| acc + q);
            let mut removed = alloc::vec![0.0; types.len()];
            let mut per_group = Vec::with_capacity(entry.layout.groups.len());
            let mut assigned = Vec::new();
            for (h, group) in entry.layout.groups.iter().enumerate() {
                let share = group.lanes.len() as f64 / entry.link.lanes as f64;
                let want = total * share;
                let supply = supplies[&(*id, h as u32)];
                let factor = if want <= supply { 1.0 } else { supply / want };
                let mut inflow = CommodityMap::new();
                for (i, vt) in types.iter().enumerate() {
                    let amount = queued[i] * share * factor;
                    removed[i] += amount;
                    assigned.clear();
                    assign_downstream(
                        &self.routing,
                        &entry.layout,
                        entry.link.end_node,
                        *vt,
                        amount,
                        t,
                        &mut assigned,
                    )?;
                    for (k, v) in &assigned {
                        inflow.add(*k, *v);
                    }
                }
                per_group.push(inflow);
            }
            for (i, vt) in types.iter().enumerate() {
                self.queues.insert((*id, *vt), (queued[i] - removed[i]).max(0.0));
            }
            pending.injected.insert(*id, per_group);
        }
        Ok(())
    }

    /// Applies local and received records and updates every link.
    pub fn phase_b(&mut self, received: BTreeMap<u32, Vec<FlowRecord>>) -> Result<StepTally, EngineError> {
        let mut pending = self.pending.take().ok_or(EngineError::PhaseOrder)?;
        for peer in &self.peers {
            if !received.contains_key(peer) {
                return Err(EngineError::MissingNeighborPacket { peer: *peer });
            }
        }
        let mut records = core::mem::take(&mut pending.records);
        for r in received.into_values().flatten() {
            self.destination(&r.slot)?;
            records.push(r);
        }
        records.sort_by(|a, b| {
            (a.slot.lane_group, a.slot.connection, a.slot.commodity).cmp(&(
                b.slot.lane_group,
                b.slot.connection,
                b.slot.commodity,
            ))
        });

        let mut inflow: BTreeMap<LinkId, Vec<CommodityMap>> = BTreeMap::new();
        let mut outflow: BTreeMap<LinkId, Vec<CommodityMap>> = BTreeMap::new();
        for r in &records {
            let rc = &self.connections[&r.slot.connection];
            let link = r.slot.lane_group.link;
            let groups = self.links[&link].layout.groups.len();
            let side = if link == rc.out_link { &mut inflow } else { &mut outflow };
            let maps = side
                .entry(link)
                .or_insert_with(|| alloc::vec![CommodityMap::new(); groups]);
            let g = r.slot.lane_group.index as usize;
            if g >= groups {
                return Err(EngineError::ForeignRecord {
                    connection: r.slot.connection,
                });
            }
            maps[g].add(r.slot.commodity, r.vehicles);
        }

        let mut tally = StepTally {
            step: self.step,
            ..StepTally::default()
        };
        for (id, entry) in &self.links {
            let mut flows = LinkFlows {
                internal: pending.internal.remove(id).unwrap_or_default(),
                inflow: inflow.remove(id).unwrap_or_default(),
                outflow: outflow.remove(id).unwrap_or_default(),
            };
            let injected = pending.injected.remove(id);
            if let Some(inj) = &injected {
                flows.inflow = inj.clone();
            }
            let discharged = pending.discharged.remove(id);
            if let Some(dis) = &discharged {
                flows.outflow = dis.clone();
            }
            let balance = update_states(*id, self.states.get_mut(id).unwrap(), &flows)?;
            if entry.start_owner == self.index {
                tally.in_network += balance.after;
                if injected.is_some() {
                    tally.entered += balance.entered;
                }
                if discharged.is_some() {
                    tally.exited += balance.left;
                }
            }
        }
        for ((link, _), q) in &self.queues {
            if self.links[link].start_owner == self.index {
                tally.queued += q;
            }
        }
        self.step += 1;
        Ok(tally)
    }

    /// Phase a and b back to back, for a subnetwork without neighbors.
    pub fn step_isolated(&mut self) -> Result<StepTally, EngineError> {
        let out = self.phase_a()?;
        let received = out.into_keys().map(|p| (p, Vec::new())).collect();
        self.phase_b(received)
    }

    /// Every nonzero state entry of the fragment's links, in
    /// `(link, lane group, cell, commodity)` order.
    pub fn dump(&self) -> Vec<StateRow> {
        let mut rows = Vec::new();
        for (id, groups) in &self.states {
            for (g, group) in groups.iter().enumerate() {
                for (c, cell) in group.cells.iter().enumerate() {
                    for (k, v) in cell.iter() {
                        rows.push(StateRow {
                            link: *id,
                            lane_group: g as u32,
                            cell: c as u32,
                            vehicle_type: k.vehicle_type,
                            next: k.next,
                            vehicles: v,
                        });
                    }
                }
            }
        }
        rows
    }

    /// Sum of all vehicles on the links this subnetwork owns.
    pub fn owned_total(&self) -> f64 {
        self.states
            .iter()
            .filter(|(id, _)| self.links[id].start_owner == self.index)
            .flat_map(|(_, g)| g.iter())
            .fold(0.0, |acc, g| acc + g.total())
    }
}
