//! Scenario JSON. The schema is described in `docs/scenario-format.md`.

use otmd_core::partition::Subnetwork;
use otmd_core::scenario::{
    DemandPiece, FdParams, LaneRange, Link, RoadConnection, Routing, Scenario, ScenarioParts,
    SimParams, SplitKey, SplitPiece, Validation, VehicleType,
};
use otmd_core::{ConnectionId, LinkId, NodeId, VehicleTypeId};
use serde::{Deserialize, Serialize};

use super::FormatError;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    nodes: Vec<NodeDto>,
    links: Vec<LinkDto>,
    #[serde(default)]
    roadconnections: Vec<ConnectionDto>,
    vehicletypes: Vec<VehicleTypeDto>,
    #[serde(default)]
    splits: Vec<SplitDto>,
    #[serde(default)]
    demands: Vec<DemandDto>,
    simulation: SimDto,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subnetwork: Option<SubnetworkDto>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDto {
    id: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkDto {
    id: u32,
    start_node: u32,
    end_node: u32,
    length: f64,
    lanes: u32,
    capacity: f64,
    free_flow_speed: f64,
    congestion_wave_speed: f64,
    jam_density: f64,
    #[serde(default)]
    source: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConnectionDto {
    id: u32,
    in_link: u32,
    out_link: u32,
    in_lanes: [u32; 2],
    out_lanes: [u32; 2],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RoutingDto {
    Deterministic,
    Probabilistic,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VehicleTypeDto {
    id: u32,
    routing: RoutingDto,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    path: Option<Vec<u32>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitDto {
    node: u32,
    in_link: u32,
    vehicle_type: u32,
    #[serde(default)]
    start: f64,
    to: Vec<(u32, f64)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DemandDto {
    link: u32,
    vehicle_type: u32,
    #[serde(default)]
    start: f64,
    flow: f64,
}

fn default_lane_change_rate() -> f64 {
    SimParams::DEFAULT_LANE_CHANGE_RATE
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimDto {
    dt: f64,
    steps: u64,
    #[serde(default = "default_lane_change_rate")]
    lane_change_rate: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubnetworkDto {
    index: u32,
    n: u32,
    nodes: Vec<u32>,
    relative_sources: Vec<(u32, u32)>,
    relative_sinks: Vec<(u32, u32)>,
    relative_source_connections: Vec<ConnectionDto>,
    relative_sink_connections: Vec<ConnectionDto>,
    boundary_splits: Vec<SplitDto>,
}

fn conn_to_dto(c: &RoadConnection) -> ConnectionDto {
    ConnectionDto {
        id: c.id.0,
        in_link: c.in_link.0,
        out_link: c.out_link.0,
        in_lanes: [c.in_lanes.first, c.in_lanes.last],
        out_lanes: [c.out_lanes.first, c.out_lanes.last],
    }
}

fn conn_from_dto(c: &ConnectionDto) -> RoadConnection {
    RoadConnection {
        id: ConnectionId(c.id),
        in_link: LinkId(c.in_link),
        out_link: LinkId(c.out_link),
        in_lanes: LaneRange::new(c.in_lanes[0], c.in_lanes[1]),
        out_lanes: LaneRange::new(c.out_lanes[0], c.out_lanes[1]),
    }
}

fn split_to_dto(key: &SplitKey, piece: &SplitPiece) -> SplitDto {
    SplitDto {
        node: key.node.0,
        in_link: key.in_link.0,
        vehicle_type: key.vehicle_type.0,
        start: piece.start,
        to: piece.probabilities.iter().map(|(l, p)| (l.0, *p)).collect(),
    }
}

fn split_from_dto(s: &SplitDto) -> (SplitKey, SplitPiece) {
    (
        SplitKey {
            node: NodeId(s.node),
            in_link: LinkId(s.in_link),
            vehicle_type: VehicleTypeId(s.vehicle_type),
        },
        SplitPiece {
            start: s.start,
            probabilities: s.to.iter().map(|(l, p)| (LinkId(*l), *p)).collect(),
        },
    )
}

fn parts_to_file(parts: &ScenarioParts) -> ScenarioFile {
    ScenarioFile {
        nodes: parts.nodes.iter().map(|n| NodeDto { id: n.0 }).collect(),
        links: parts
            .links
            .iter()
            .map(|l| LinkDto {
                id: l.id.0,
                start_node: l.start_node.0,
                end_node: l.end_node.0,
                length: l.length,
                lanes: l.lanes,
                capacity: l.fd.capacity,
                free_flow_speed: l.fd.free_flow_speed,
                congestion_wave_speed: l.fd.congestion_wave_speed,
                jam_density: l.fd.jam_density,
                source: l.is_source,
            })
            .collect(),
        roadconnections: parts.connections.iter().map(conn_to_dto).collect(),
        vehicletypes: parts
            .vehicle_types
            .iter()
            .map(|v| match &v.routing {
                Routing::Deterministic(path) => VehicleTypeDto {
                    id: v.id.0,
                    routing: RoutingDto::Deterministic,
                    path: Some(path.iter().map(|l| l.0).collect()),
                },
                Routing::Probabilistic => VehicleTypeDto {
                    id: v.id.0,
                    routing: RoutingDto::Probabilistic,
                    path: None,
                },
            })
            .collect(),
        splits: parts.splits.iter().map(|(k, p)| split_to_dto(k, p)).collect(),
        demands: parts
            .demands
            .iter()
            .map(|(l, t, d)| DemandDto {
                link: l.0,
                vehicle_type: t.0,
                start: d.start,
                flow: d.rate,
            })
            .collect(),
        simulation: SimDto {
            dt: parts.sim.dt,
            steps: parts.sim.steps,
            lane_change_rate: parts.sim.lane_change_rate,
        },
        subnetwork: None,
    }
}

fn file_to_parts(f: &ScenarioFile) -> Result<ScenarioParts, FormatError> {
    let mut vehicle_types = Vec::with_capacity(f.vehicletypes.len());
    for v in &f.vehicletypes {
        let routing = match (&v.routing, &v.path) {
            (RoutingDto::Deterministic, Some(path)) => {
                Routing::Deterministic(path.iter().map(|l| LinkId(*l)).collect())
            }
            (RoutingDto::Deterministic, None) => {
                return Err(FormatError::Schema(format!("vehicle type {}: deterministic routing needs a path", v.id)))
            }
            (RoutingDto::Probabilistic, None) => Routing::Probabilistic,
            (RoutingDto::Probabilistic, Some(_)) => {
                return Err(FormatError::Schema(format!(
                    "vehicle type {}: probabilistic routing takes no path",
                    v.id
                )))
            }
        };
        vehicle_types.push(VehicleType {
            id: VehicleTypeId(v.id),
            routing,
        });
    }
    Ok(ScenarioParts {
        nodes: f.nodes.iter().map(|n| NodeId(n.id)).collect(),
        links: f
            .links
            .iter()
            .map(|l| Link {
                id: LinkId(l.id),
                start_node: NodeId(l.start_node),
                end_node: NodeId(l.end_node),
                length: l.length,
                lanes: l.lanes,
                fd: FdParams {
                    capacity: l.capacity,
                    free_flow_speed: l.free_flow_speed,
                    congestion_wave_speed: l.congestion_wave_speed,
                    jam_density: l.jam_density,
                },
                is_source: l.source,
            })
            .collect(),
        connections: f.roadconnections.iter().map(conn_from_dto).collect(),
        vehicle_types,
        splits: f.splits.iter().map(split_from_dto).collect(),
        demands: f
            .demands
            .iter()
            .map(|d| {
                (
                    LinkId(d.link),
                    VehicleTypeId(d.vehicle_type),
                    DemandPiece {
                        start: d.start,
                        rate: d.flow,
                    },
                )
            })
            .collect(),
        sim: SimParams {
            dt: f.simulation.dt,
            steps: f.simulation.steps,
            lane_change_rate: f.simulation.lane_change_rate,
        },
    })
}

fn read_file(text: &str) -> Result<ScenarioFile, FormatError> {
    serde_json::from_str(text).map_err(FormatError::from)
}

fn write_file(f: &ScenarioFile) -> String {
    let mut s = serde_json::to_string_pretty(f).expect("scenario DTOs always serialize");
    s.push('\n');
    s
}

/// Parse and fully validate a scenario file. A `subnetwork` section, if
/// present, is rejected: fragments go through [`parse_fragment`].
pub fn parse_scenario(text: &str) -> Result<Scenario, FormatError> {
    let f = read_file(text)?;
    if f.subnetwork.is_some() {
        return Err(FormatError::Schema(
            "file is a subnetwork fragment; load it as a fragment".into(),
        ));
    }
    Ok(Scenario::from_parts(file_to_parts(&f)?)?)
}

pub fn scenario_to_json(scenario: &Scenario) -> String {
    write_file(&parts_to_file(&scenario.to_parts()))
}

/// Parse a subnetwork fragment file written by [`fragment_to_json`].
pub fn parse_fragment(text: &str) -> Result<Subnetwork, FormatError> {
    let f = read_file(text)?;
    let Some(sub) = &f.subnetwork else {
        return Err(FormatError::Schema("missing `subnetwork` section".into()));
    };
    let fragment = Scenario::from_parts_with(file_to_parts(&f)?, Validation::Fragment)?;
    let s = Subnetwork {
        index: sub.index,
        n: sub.n,
        nodes: sub.nodes.iter().map(|n| NodeId(*n)).collect(),
        relative_sources: sub.relative_sources.iter().map(|(l, i)| (LinkId(*l), *i)).collect(),
        relative_sinks: sub.relative_sinks.iter().map(|(l, i)| (LinkId(*l), *i)).collect(),
        relative_source_connections: sub.relative_source_connections.iter().map(conn_from_dto).collect(),
        relative_sink_connections: sub.relative_sink_connections.iter().map(conn_from_dto).collect(),
        boundary_splits: sub.boundary_splits.iter().map(split_from_dto).collect(),
        fragment,
    };
    s.validate()?;
    Ok(s)
}

pub fn fragment_to_json(sub: &Subnetwork) -> String {
    let mut f = parts_to_file(&sub.fragment.to_parts());
    f.subnetwork = Some(SubnetworkDto {
        index: sub.index,
        n: sub.n,
        nodes: sub.nodes.iter().map(|n| n.0).collect(),
        relative_sources: sub.relative_sources.iter().map(|(l, i)| (l.0, *i)).collect(),
        relative_sinks: sub.relative_sinks.iter().map(|(l, i)| (l.0, *i)).collect(),
        relative_source_connections: sub.relative_source_connections.iter().map(conn_to_dto).collect(),
        relative_sink_connections: sub.relative_sink_connections.iter().map(conn_to_dto).collect(),
        boundary_splits: sub.boundary_splits.iter().map(|(k, p)| split_to_dto(k, p)).collect(),
    });
    write_file(&f)
}
